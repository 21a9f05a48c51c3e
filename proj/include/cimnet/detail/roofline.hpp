#pragma once

// Shared roofline kernel used by simulate_layer and the dataflow compiler. A
// spatial split is profiled once; temporal options only rescale the operand
// re-fetch terms, so they are evaluated against the cached profile.

#include <cstdint>
#include <vector>

#include "cimnet/cim.hpp"

namespace cimnet::detail {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

struct SpatialProfile {
  std::int64_t sg = 1, si = 1, so = 1, sic = 1;
  // Full (largest) per-node tile extents.
  std::int64_t eg = 1, ei = 1, eo = 1, ec = 1;
  std::int64_t node_ifm = 0, node_w = 0, node_ofm = 0;
  // Per L1 decoder: summed child ifm bytes, weight bytes, ofm + local
  // reduction bytes.
  std::vector<std::int64_t> dec_ifm, dec_w, dec_out;
  std::int64_t sum_ifm = 0, sum_w = 0, sum_out = 0;  // MA level, per-node sums
  std::int64_t local_reduction = 0;
  std::int64_t inter_l1_reduction = 0;
  std::int64_t uniq_ifm = 0, uniq_w = 0, uniq_ofm = 0;
};

// Cheap lower bound on cycles of any temporal option for this split
// (COMPUTE, MA, DRAM and L2 without reduction traffic at ti = to = 1).
std::int64_t spatial_lower_bound(const LayerSpec& layer, const HardwareConfig& cfg, std::int64_t sg,
                                 std::int64_t si, std::int64_t so, std::int64_t sic);

SpatialProfile profile_spatial(const LayerSpec& layer, const HardwareConfig& cfg, std::int64_t sg,
                               std::int64_t si, std::int64_t so, std::int64_t sic);

LayerCycles evaluate_temporal(const SpatialProfile& p, const HardwareConfig& cfg, std::int64_t ti,
                              std::int64_t to);

}  // namespace cimnet::detail
