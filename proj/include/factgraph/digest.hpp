#pragma once

#include <string>
#include <string_view>

namespace factgraph {

/// Hex-encoded SHA-256 of the given bytes. Used for prompt digests and
/// offline search fixture filenames (fixtures/<sha256(query)>.json).
std::string sha256_hex(std::string_view data);

}  // namespace factgraph
