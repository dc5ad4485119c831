#pragma once

// On-disk formats.
//
// SIRF  feature dump   "SIRF" u32 version=1, u32 name_len, name bytes,
//                      u32 C, u32 H, u32 W, C*H*W f32 (channel-major, row-major)
// SIRM  edge matrix    "SIRM" u32 version=1, u32 name_len, name bytes,
//                      u32 n, u64 update_count, f64 alpha, n*n f32 row-major
//
// All integers and floats are little-endian. Values are held as f64 in memory
// and rounded to f32 on write, so read(write(m)) reproduces m exactly when its
// values are f32-representable and is idempotent otherwise.
//
// Mask, topology and plan documents are JSON text.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"

namespace sirfp {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kFormatVersion = 1;

Bytes write_feature_dump(const FeatureMapSet& fm);
/// Errors: BadMagic, VersionUnsupported, Truncated, LengthMismatch, NonFiniteValue.
FeatureMapSet read_feature_dump(std::span<const std::uint8_t> bytes);

Bytes write_edge_matrix(const EdgeWeightMatrix& m);
/// Errors: BadMagic, VersionUnsupported, Truncated, LengthMismatch,
/// AsymmetryDetected, NonZeroDiagonal, InvalidAlpha.
EdgeWeightMatrix read_edge_matrix(std::span<const std::uint8_t> bytes);

std::string write_mask(const PruneDecision& d);
/// Errors: Parse, OverlapDetected, IncompleteCover, TraceMismatch, IndexOutOfRange.
PruneDecision read_mask(std::string_view text);

std::string write_topology(const LayerTopology& t);
LayerTopology read_topology(std::string_view text);

std::string write_plan(const PruningPlan& p);
/// Missing optional fields take the defaults (alpha 0.99, max sparsity 0.9,
/// js, full resolution). Validates the plan.
PruningPlan read_plan(std::string_view text);

Bytes read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

/// Layer ids may contain '/', '.', etc.; map them to a safe file stem.
std::string file_stem_for(std::string_view layer_id);

}  // namespace sirfp
