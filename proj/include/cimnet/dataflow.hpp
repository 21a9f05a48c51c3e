#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "cimnet/cim.hpp"

namespace cimnet {

using SpatialTile = std::array<std::int64_t, 4>;   // (sg, si, so, sic)
using TemporalTile = std::array<std::int64_t, 4>;  // (tg, ti, to, tic)

struct TileOption {
  Dataflow dataflow;
  LayerCycles result;
};

// Powers of two below `extent` plus `extent` itself, capped at `cap`.
std::vector<std::int64_t> factor_ladder(std::int64_t extent, std::int64_t cap);

// Spatial splits with product <= node count, ascending lexicographic order.
// G is split first: when G >= node count every tuple is (nodes, 1, 1, 1).
std::vector<SpatialTile> enumerate_spatial_tiles(const LayerSpec& layer, const HardwareConfig& cfg);

// Minimal power-of-two chunkings of the per-node tile whose double-buffered
// chunk fits ma_mem_size: no entry can have a chunk count halved and still
// fit. Sorted by total temporal steps, then lexicographically. Empty when
// even one-element chunks overflow the array memory.
std::vector<TemporalTile> enumerate_temporal_tiles(const LayerSpec& layer, const HardwareConfig& cfg,
                                                   const SpatialTile& spatial);

// Latency-minimal dataflow. Ties break on fewer active nodes, then fewer
// temporal steps, then lexicographic (spatial, temporal) order. Throws
// InfeasibleError when no spatial option admits a fitting chunking.
Dataflow compile_dataflow(const LayerSpec& layer, const HardwareConfig& cfg);

// Every enumerated (spatial, temporal) option with its simulated cost.
std::vector<TileOption> enumerate_tile_options(const LayerSpec& layer, const HardwareConfig& cfg);

// Tie-break order used by compile_dataflow; true when `a` is preferred.
bool better_option(const LayerCycles& a, const Dataflow& da, const LayerCycles& b, const Dataflow& db);

// Memoizing wrapper around compile_dataflow; thread-safe.
class CachingCompiler {
 public:
  Dataflow operator()(const LayerSpec& layer, const HardwareConfig& cfg);
  std::size_t size() const;

 private:
  using Key = std::array<std::int64_t, 13>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  mutable std::mutex mutex_;
  std::unordered_map<Key, Dataflow, KeyHash> cache_;
};

}  // namespace cimnet
