#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "morphgrasp/layers.hpp"
#include "morphgrasp/optim.hpp"

namespace mg::nn {

// FNV-1a over bytes; used to fingerprint the config a checkpoint was trained
// with so incompatible loads fail loudly instead of silently reshaping.
std::uint64_t fnv1a64(const std::string& bytes);

// Binary layout: 8-byte magic "MGCK0001", u64 header length, JSON header
// (sorted keys, no timestamps -- reruns with identical state produce identical
// bytes), then raw little-endian float64 payload. The header lists every
// parameter (name, shape, trainable flag) in store order plus the Adam moment
// entries; payload order is parameters first, then per-entry m and v.
void save_checkpoint(const std::string& path, const ParamStore& ps, const AdamState& adam,
                     const nlohmann::json& meta);

// Restores values into an already-built store. Parameter names and shapes must
// match the header exactly (ConfigMismatch otherwise). Returns the meta block.
nlohmann::json load_checkpoint(const std::string& path, ParamStore& ps, AdamState& adam);

// Header-only read for config inspection before the store exists.
nlohmann::json read_checkpoint_meta(const std::string& path);

}  // namespace mg::nn
