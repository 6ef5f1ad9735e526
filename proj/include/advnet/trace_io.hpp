#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "advnet/adversary.hpp"

namespace advnet {

// Trace file: JSON Lines. The first line is a header (topology, mode, rounds,
// flows, utility constants, arrival set, reference metadata); every further
// line is one round. Reference allocations and arrivals are written only on
// the first round and whenever they change. Indices are 0-based.
inline constexpr int kTraceFormatVersion = 1;

std::string serialize_trace(const AdversaryTrace& trace, const ReferencePolicy& ref);
// Throws ParseError naming the offending line and key.
GeneratedTrace parse_trace(std::string_view text);

void save_trace(const std::filesystem::path& path, const AdversaryTrace& trace,
                const ReferencePolicy& ref);
GeneratedTrace load_trace(const std::filesystem::path& path);

// Hex SHA-1 of "blob <size>\0" + bytes, as git computes object ids.
std::string content_hash(std::string_view bytes);

}  // namespace advnet
