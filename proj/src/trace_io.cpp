#include "advnet/trace_io.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "advnet/error.hpp"

namespace advnet {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kFormatName = "advnet-trace";

Json sparse_entries(const ArrivalMatrix& m) {
  Json out = Json::array();
  for (std::size_t n = 0; n < m.rows(); ++n) {
    for (std::size_t k = 0; k < m.cols(); ++k) {
      if (m(n, k) != 0.0) out.push_back(Json::array({n, k, m(n, k)}));
    }
  }
  return out;
}

ArrivalMatrix dense_entries(const Json& j, std::size_t servers) {
  ArrivalMatrix m(servers, servers);
  for (const Json& e : j) {
    const auto n = e.at(0).get<std::size_t>();
    const auto k = e.at(1).get<std::size_t>();
    if (n >= servers || k >= servers) throw ParseError("arrival entry out of range");
    m(n, k) = e.at(2).get<double>();
  }
  return m;
}

Json plan_rows(const LinkAllocationPlan& plan) {
  Json out = Json::array();
  for (std::size_t l = 0; l < plan.rows(); ++l) {
    const auto row = plan.row(l);
    out.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return out;
}

LinkAllocationPlan plan_from_rows(const Json& j, std::size_t links, std::size_t servers) {
  if (j.size() != links) throw ParseError("reference allocation has the wrong number of links");
  LinkAllocationPlan plan(links, servers);
  for (std::size_t l = 0; l < links; ++l) {
    const auto row = j.at(l).get<std::vector<double>>();
    if (row.size() != servers) throw ParseError("reference allocation row has the wrong width");
    std::copy(row.begin(), row.end(), plan.row(l).begin());
  }
  return plan;
}

Json header_record(const AdversaryTrace& trace, const ReferencePolicy& ref) {
  const Topology& topo = trace.topology;
  Json links = Json::array();
  for (const Link& l : topo.links()) links.push_back(Json::array({l.from, l.to}));
  Json flows = Json::array();
  for (const Flow& f : trace.flows) flows.push_back(Json::array({f.source, f.destination}));
  Json windows = Json::array();
  for (const Window& w : ref.windows) windows.push_back(Json::array({w.start, w.length}));

  Json h;
  h["format"] = kFormatName;
  h["version"] = kTraceFormatVersion;
  h["mode"] = to_string(trace.mode);
  h["rounds"] = trace.rounds();
  h["topology"] = {{"servers", topo.servers()},
                   {"links", links},
                   {"capacity_bound", topo.capacity_bound()},
                   {"arrival_bound", topo.arrival_bound()}};
  h["flows"] = flows;
  if (trace.mode == TraceMode::kUtility) {
    const BallSandwichedSet& set = trace.arrival_set.value();
    h["utility"] = {{"family", to_string(trace.utility_family)},
                    {"bound", trace.utility_bound},
                    {"lipschitz", trace.lipschitz}};
    h["arrival_set"] = {{"geometry", to_string(set.geometry())},
                        {"center", set.center()},
                        {"radius", set.inner_radius()}};
  }
  h["reference"] = {
      {"slack", ref.slack},
      {"window_constant", ref.window_constant},
      {"allocation_budget", Json::array({ref.allocation_budget.constant, ref.allocation_budget.exponent})},
      {"arrival_budget", Json::array({ref.arrival_budget.constant, ref.arrival_budget.exponent})},
      {"windows", windows}};
  return h;
}

std::string context(std::size_t line, const std::exception& e) {
  return fmt::format("trace line {}: {}", line, e.what());
}

}  // namespace

std::string serialize_trace(const AdversaryTrace& trace, const ReferencePolicy& ref) {
  const bool utility = trace.mode == TraceMode::kUtility;
  std::string out = header_record(trace, ref).dump();
  out += '\n';
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    Json r;
    r["t"] = t;
    r["capacity"] = std::vector<double>(trace.capacities[t].values().begin(),
                                        trace.capacities[t].values().end());
    if (utility) {
      r["utility"] = trace.utility_params[t];
    } else {
      r["arrivals"] = sparse_entries(trace.arrivals[t]);
    }
    if (t == 0 || !(ref.allocations[t] == ref.allocations[t - 1])) {
      r["ref_allocation"] = plan_rows(ref.allocations[t]);
    }
    if (utility && (t == 0 || !(ref.arrivals[t] == ref.arrivals[t - 1]))) {
      r["ref_arrivals"] = sparse_entries(ref.arrivals[t]);
    }
    out += r.dump();
    out += '\n';
  }
  return out;
}

GeneratedTrace parse_trace(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    if (end > pos) lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.empty()) throw ParseError("trace is empty");

  GeneratedTrace out;
  AdversaryTrace& trace = out.trace;
  ReferencePolicy& ref = out.reference;
  std::size_t rounds = 0;
  try {
    const Json h = Json::parse(lines[0]);
    if (h.at("format").get<std::string>() != kFormatName) throw ParseError("not a trace file");
    if (h.at("version").get<int>() != kTraceFormatVersion) {
      throw ParseError(fmt::format("unsupported trace version {}", h.at("version").dump()));
    }
    trace.mode = parse_trace_mode(h.at("mode").get<std::string>());
    rounds = h.at("rounds").get<std::size_t>();
    const Json& topo = h.at("topology");
    std::vector<Link> links;
    for (const Json& l : topo.at("links")) links.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>()});
    trace.topology = Topology(topo.at("servers").get<std::size_t>(), std::move(links),
                              topo.at("capacity_bound").get<double>(),
                              topo.at("arrival_bound").get<double>());
    for (const Json& f : h.at("flows")) {
      trace.flows.push_back({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>()});
    }
    if (trace.mode == TraceMode::kUtility) {
      const Json& u = h.at("utility");
      trace.utility_family = parse_utility_family(u.at("family").get<std::string>());
      trace.utility_bound = u.at("bound").get<double>();
      trace.lipschitz = u.at("lipschitz").get<double>();
      const Json& s = h.at("arrival_set");
      auto center = s.at("center").get<std::vector<double>>();
      const auto radius = s.at("radius").get<double>();
      trace.arrival_set = parse_set_geometry(s.at("geometry").get<std::string>()) == SetGeometry::kBox
                              ? BallSandwichedSet::box_around(std::move(center), radius)
                              : BallSandwichedSet::ball(std::move(center), radius);
    }
    const Json& r = h.at("reference");
    ref.slack = r.at("slack").get<double>();
    ref.window_constant = r.at("window_constant").get<double>();
    ref.allocation_budget = {r.at("allocation_budget").at(0).get<double>(),
                             r.at("allocation_budget").at(1).get<double>()};
    ref.arrival_budget = {r.at("arrival_budget").at(0).get<double>(),
                          r.at("arrival_budget").at(1).get<double>()};
    for (const Json& w : r.at("windows")) {
      ref.windows.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(context(1, e));
  }

  if (lines.size() != rounds + 1) {
    throw ParseError(fmt::format("header promises {} rounds but the file has {}", rounds,
                                 lines.size() - 1));
  }
  const bool utility = trace.mode == TraceMode::kUtility;
  const std::size_t servers = trace.topology.servers();
  const std::size_t link_count = trace.topology.link_count();
  trace.capacities.reserve(rounds);
  ref.allocations.reserve(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    try {
      const Json r = Json::parse(lines[t + 1]);
      if (r.at("t").get<std::size_t>() != t) throw ParseError(fmt::format("expected round {}", t));
      auto cap = r.at("capacity").get<std::vector<double>>();
      if (cap.size() != link_count) throw ParseError("capacity has the wrong number of links");
      trace.capacities.emplace_back(std::move(cap));
      if (utility) {
        trace.utility_params.push_back(r.at("utility").get<std::vector<double>>());
      } else {
        trace.arrivals.push_back(dense_entries(r.at("arrivals"), servers));
      }
      if (r.contains("ref_allocation")) {
        ref.allocations.push_back(plan_from_rows(r.at("ref_allocation"), link_count, servers));
      } else if (t == 0) {
        throw ParseError("first round lacks ref_allocation");
      } else {
        ref.allocations.push_back(ref.allocations.back());
      }
      if (utility) {
        if (r.contains("ref_arrivals")) {
          ref.arrivals.push_back(dense_entries(r.at("ref_arrivals"), servers));
        } else if (t == 0) {
          throw ParseError("first round lacks ref_arrivals");
        } else {
          ref.arrivals.push_back(ref.arrivals.back());
        }
      }
    } catch (const std::exception& e) {
      throw ParseError(context(t + 2, e));
    }
  }
  return out;
}

void save_trace(const std::filesystem::path& path, const AdversaryTrace& trace,
                const ReferencePolicy& ref) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot write {}", path.string()));
  f << serialize_trace(trace, ref);
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

GeneratedTrace load_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot read {}", path.string()));
  const std::string text{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  return parse_trace(text);
}

std::string content_hash(std::string_view bytes) {
  const std::string prefix = fmt::format("blob {}", bytes.size());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size() + 1) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw InvariantFailure("SHA-1 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace advnet
