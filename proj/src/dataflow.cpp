#include "cimnet/dataflow.hpp"

#include <algorithm>
#include <limits>

#include "cimnet/detail/roofline.hpp"
#include "cimnet/rng.hpp"

namespace cimnet {

using detail::ceil_div;

std::vector<std::int64_t> factor_ladder(std::int64_t extent, std::int64_t cap) {
  std::vector<std::int64_t> out;
  for (std::int64_t f = 1; f < extent && f <= cap; f *= 2) out.push_back(f);
  if (extent <= cap) out.push_back(extent);
  return out;
}

std::vector<SpatialTile> enumerate_spatial_tiles(const LayerSpec& layer, const HardwareConfig& cfg) {
  const std::int64_t nodes = cfg.num_nodes();
  std::vector<std::int64_t> sg_options;
  if (layer.groups >= nodes) {
    sg_options = {nodes};
  } else {
    sg_options = factor_ladder(layer.groups, nodes);
  }
  std::vector<SpatialTile> out;
  for (auto sg : sg_options) {
    const std::int64_t rest_g = nodes / sg;
    for (auto si : factor_ladder(layer.rows, rest_g)) {
      const std::int64_t rest_i = rest_g / si;
      for (auto so : factor_ladder(layer.out_channels, rest_i)) {
        const std::int64_t rest_o = rest_i / so;
        for (auto sic : factor_ladder(layer.reduction, rest_o)) out.push_back({sg, si, so, sic});
      }
    }
  }
  return out;
}

std::vector<TemporalTile> enumerate_temporal_tiles(const LayerSpec& layer, const HardwareConfig& cfg,
                                                   const SpatialTile& spatial) {
  const std::int64_t eg = ceil_div(layer.groups, spatial[0]);
  const std::int64_t ei = ceil_div(layer.rows, spatial[1]);
  const std::int64_t eo = ceil_div(layer.out_channels, spatial[2]);
  const std::int64_t ec = ceil_div(layer.reduction, spatial[3]);
  const auto lg = factor_ladder(eg, eg);
  const auto li = factor_ladder(ei, ei);
  const auto lo = factor_ladder(eo, eo);
  const auto lc = factor_ladder(ec, ec);
  const std::int64_t b = layer.elem_bytes;
  const std::int64_t mem = cfg.ma_mem_size;

  auto fits = [&](std::int64_t tg, std::int64_t ti, std::int64_t to, std::int64_t tic) {
    const std::int64_t cg = ceil_div(eg, tg), ci = ceil_div(ei, ti);
    const std::int64_t co = ceil_div(eo, to), cc = ceil_div(ec, tic);
    return 2 * cg * (ci * cc + cc * co + ci * co) * b <= mem;
  };

  // min_tic[g][i][o]: smallest ladder index of tic that fits, or lc.size().
  const std::size_t ng = lg.size(), ni = li.size(), no = lo.size(), nc = lc.size();
  std::vector<std::size_t> min_tic(ng * ni * no, nc);
  auto at = [&](std::size_t g, std::size_t i, std::size_t o) -> std::size_t& {
    return min_tic[(g * ni + i) * no + o];
  };
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t i = 0; i < ni; ++i) {
      for (std::size_t o = 0; o < no; ++o) {
        if (!fits(lg[g], li[i], lo[o], lc.back())) continue;
        std::size_t lo_idx = 0, hi_idx = nc - 1;
        while (lo_idx < hi_idx) {
          const std::size_t mid = (lo_idx + hi_idx) / 2;
          if (fits(lg[g], li[i], lo[o], lc[mid])) {
            hi_idx = mid;
          } else {
            lo_idx = mid + 1;
          }
        }
        at(g, i, o) = lo_idx;
      }
    }
  }

  std::vector<TemporalTile> out;
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t i = 0; i < ni; ++i) {
      for (std::size_t o = 0; o < no; ++o) {
        const std::size_t c = at(g, i, o);
        if (c == nc) continue;
        if (g > 0 && at(g - 1, i, o) <= c) continue;
        if (i > 0 && at(g, i - 1, o) <= c) continue;
        if (o > 0 && at(g, i, o - 1) <= c) continue;
        out.push_back({lg[g], li[i], lo[o], lc[c]});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const TemporalTile& a, const TemporalTile& b) {
    const auto sa = a[0] * a[1] * a[2] * a[3], sb = b[0] * b[1] * b[2] * b[3];
    return sa != sb ? sa < sb : a < b;
  });
  return out;
}

bool better_option(const LayerCycles& a, const Dataflow& da, const LayerCycles& b, const Dataflow& db) {
  if (a.cycles != b.cycles) return a.cycles < b.cycles;
  if (da.active_nodes() != db.active_nodes()) return da.active_nodes() < db.active_nodes();
  if (da.temporal_steps() != db.temporal_steps()) return da.temporal_steps() < db.temporal_steps();
  return da.key() < db.key();
}

Dataflow compile_dataflow(const LayerSpec& layer, const HardwareConfig& cfg) {
  layer.validate();
  if (!cfg.is_positive()) throw ConfigError("hardware configuration must be strictly positive");
  bool found = false;
  Dataflow best;
  LayerCycles best_cost;
  best_cost.cycles = std::numeric_limits<std::int64_t>::max();
  for (const auto& sp : enumerate_spatial_tiles(layer, cfg)) {
    if (found && detail::spatial_lower_bound(layer, cfg, sp[0], sp[1], sp[2], sp[3]) > best_cost.cycles) {
      continue;
    }
    const auto temporal = enumerate_temporal_tiles(layer, cfg, sp);
    if (temporal.empty()) continue;
    const auto profile = detail::profile_spatial(layer, cfg, sp[0], sp[1], sp[2], sp[3]);
    for (const auto& t : temporal) {
      const Dataflow df{sp[0], sp[1], sp[2], sp[3], t[0], t[1], t[2], t[3]};
      const auto cost = detail::evaluate_temporal(profile, cfg, t[1], t[2]);
      if (!found || better_option(cost, df, best_cost, best)) {
        best = df;
        best_cost = cost;
        found = true;
      }
    }
  }
  if (!found) {
    throw InfeasibleError("layer '" + layer.name + "': no dataflow fits ma_mem_size=" +
                          std::to_string(cfg.ma_mem_size));
  }
  return best;
}

std::vector<TileOption> enumerate_tile_options(const LayerSpec& layer, const HardwareConfig& cfg) {
  std::vector<TileOption> out;
  for (const auto& sp : enumerate_spatial_tiles(layer, cfg)) {
    const auto temporal = enumerate_temporal_tiles(layer, cfg, sp);
    if (temporal.empty()) continue;
    const auto profile = detail::profile_spatial(layer, cfg, sp[0], sp[1], sp[2], sp[3]);
    for (const auto& t : temporal) {
      const Dataflow df{sp[0], sp[1], sp[2], sp[3], t[0], t[1], t[2], t[3]};
      out.push_back({df, detail::evaluate_temporal(profile, cfg, t[1], t[2])});
    }
  }
  return out;
}

std::size_t CachingCompiler::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = 0;
  for (auto v : k) h = mix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

Dataflow CachingCompiler::operator()(const LayerSpec& layer, const HardwareConfig& cfg) {
  const Key key = {layer.groups,   layer.rows,        layer.reduction, layer.out_channels,
                   layer.elem_bytes, cfg.dram_bw,     cfg.l2_bw,       cfg.l1_bw,
                   cfg.l1_num_child, cfg.ma_bw,       cfg.ma_mem_size, cfg.ma_num_child,
                   cfg.ma_comp_per_core};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const Dataflow df = compile_dataflow(layer, cfg);
  std::lock_guard lock(mutex_);
  cache_.emplace(key, df);
  return df;
}

std::size_t CachingCompiler::size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace cimnet
