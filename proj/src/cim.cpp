#include "cimnet/cim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cimnet/detail/roofline.hpp"

namespace cimnet {

using detail::ceil_div;

const char* field_name(HwField f) {
  switch (f) {
    case HwField::DramBw: return "dram_bw";
    case HwField::L2Bw: return "l2_bw";
    case HwField::L1Bw: return "l1_bw";
    case HwField::L1NumChild: return "l1_num_child";
    case HwField::MaBw: return "ma_bw";
    case HwField::MaMemSize: return "ma_mem_size";
    case HwField::MaNumChild: return "ma_num_child";
    case HwField::MaCompPerCore: return "ma_comp_per_core";
  }
  return "?";
}

HwField field_from_name(const std::string& name) {
  for (auto f : kHwFields) {
    if (name == field_name(f)) return f;
  }
  throw ConfigError("unknown hardware field '" + name + "'");
}

std::int64_t& HardwareConfig::operator[](HwField f) {
  switch (f) {
    case HwField::DramBw: return dram_bw;
    case HwField::L2Bw: return l2_bw;
    case HwField::L1Bw: return l1_bw;
    case HwField::L1NumChild: return l1_num_child;
    case HwField::MaBw: return ma_bw;
    case HwField::MaMemSize: return ma_mem_size;
    case HwField::MaNumChild: return ma_num_child;
    case HwField::MaCompPerCore: return ma_comp_per_core;
  }
  return dram_bw;
}

std::int64_t HardwareConfig::operator[](HwField f) const {
  return const_cast<HardwareConfig&>(*this)[f];
}

bool HardwareConfig::is_positive() const {
  return std::all_of(kHwFields.begin(), kHwFields.end(), [&](HwField f) { return (*this)[f] > 0; });
}

std::ostream& operator<<(std::ostream& os, const HardwareConfig& cfg) {
  os << '{';
  for (std::size_t i = 0; i < kNumHwFields; ++i) {
    if (i) os << ", ";
    os << field_name(kHwFields[i]) << '=' << cfg[kHwFields[i]];
  }
  return os << '}';
}

std::int64_t ConfigSpace::value_at(HwField field, int rung) const {
  const double v = static_cast<double>(base[field]) * ladder.at(static_cast<std::size_t>(rung));
  return std::llround(v);
}

std::optional<int> ConfigSpace::rung_of(HwField field, std::int64_t value) const {
  for (int r = 0; r < num_rungs(); ++r) {
    if (value_at(field, r) == value) return r;
  }
  return std::nullopt;
}

HardwareConfig ConfigSpace::config_from_rungs(const std::array<int, kNumHwFields>& rungs) const {
  HardwareConfig cfg;
  for (std::size_t i = 0; i < kNumHwFields; ++i) cfg[kHwFields[i]] = value_at(kHwFields[i], rungs[i]);
  return cfg;
}

std::array<int, kNumHwFields> ConfigSpace::rungs_of(const HardwareConfig& cfg) const {
  std::array<int, kNumHwFields> rungs{};
  for (std::size_t i = 0; i < kNumHwFields; ++i) {
    const auto r = rung_of(kHwFields[i], cfg[kHwFields[i]]);
    if (!r) {
      throw ConfigError(std::string(field_name(kHwFields[i])) + ": value " +
                        std::to_string(cfg[kHwFields[i]]) + " is not on the ladder");
    }
    rungs[i] = *r;
  }
  return rungs;
}

double ConfigSpace::multiplier(const HardwareConfig& cfg, HwField field) const {
  return static_cast<double>(cfg[field]) / static_cast<double>(base[field]);
}

void ConfigSpace::validate() const {
  if (!base.is_positive()) throw ConfigError("base configuration must be strictly positive");
  if (ladder.empty()) throw ConfigError("ladder must not be empty");
  if (!std::is_sorted(ladder.begin(), ladder.end()) || ladder.front() <= 0) {
    throw ConfigError("ladder must be positive and ascending");
  }
  for (auto f : kHwFields) {
    for (int r = 0; r < num_rungs(); ++r) {
      const double exact = static_cast<double>(base[f]) * ladder[static_cast<std::size_t>(r)];
      if (value_at(f, r) < 1 || std::abs(exact - static_cast<double>(value_at(f, r))) > 1e-9) {
        throw ConfigError(std::string(field_name(f)) + ": base * ladder must be a positive integer");
      }
    }
  }
  if (memory_budget_lo > memory_budget_hi) throw ConfigError("memory budget range is inverted");
}

ConfigSpace default_config_space() { return ConfigSpace{}; }

HardwareConfig static_config(const ConfigSpace& space) {
  auto at = [&](HwField f, double m) {
    for (int r = 0; r < space.num_rungs(); ++r) {
      if (space.ladder[static_cast<std::size_t>(r)] == m) return space.value_at(f, r);
    }
    throw ConfigError("static configuration multiplier is not on the ladder");
  };
  HardwareConfig cfg;
  cfg.dram_bw = at(HwField::DramBw, 0.125);
  cfg.l2_bw = at(HwField::L2Bw, 0.25);
  cfg.l1_bw = at(HwField::L1Bw, 0.25);
  cfg.l1_num_child = at(HwField::L1NumChild, 0.5);
  cfg.ma_bw = at(HwField::MaBw, 0.25);
  cfg.ma_mem_size = at(HwField::MaMemSize, 0.5);
  cfg.ma_num_child = at(HwField::MaNumChild, 0.5);
  cfg.ma_comp_per_core = at(HwField::MaCompPerCore, 0.5);
  return cfg;
}

namespace {

struct Products {
  double compute;
  double memory;
};

Products products_of_rungs(const ConfigSpace& space, const std::array<int, kNumHwFields>& rungs) {
  auto m = [&](HwField f) { return space.ladder[static_cast<std::size_t>(rungs[static_cast<std::size_t>(f)])]; };
  return {m(HwField::L1NumChild) * m(HwField::MaNumChild) * m(HwField::MaCompPerCore),
          m(HwField::L1NumChild) * m(HwField::MaNumChild) * m(HwField::MaMemSize)};
}

bool budgets_hold(const ConfigSpace& space, const Products& p) {
  return p.compute == space.compute_budget && p.memory >= space.memory_budget_lo &&
         p.memory <= space.memory_budget_hi;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ValidationResult validate_config(const HardwareConfig& cfg, const ConfigSpace& space) {
  ValidationResult result;
  std::array<int, kNumHwFields> rungs{};
  bool on_ladder = true;
  for (std::size_t i = 0; i < kNumHwFields; ++i) {
    const auto f = kHwFields[i];
    if (cfg[f] <= 0) {
      result.violations.push_back(std::string(field_name(f)) + ": must be positive");
      on_ladder = false;
      continue;
    }
    const auto r = space.rung_of(f, cfg[f]);
    if (!r) {
      result.violations.push_back(std::string(field_name(f)) + ": multiplier " +
                                  fmt(space.multiplier(cfg, f)) + " is not on the ladder");
      on_ladder = false;
      continue;
    }
    rungs[i] = *r;
  }
  if (!on_ladder) return result;
  const auto p = products_of_rungs(space, rungs);
  if (p.compute != space.compute_budget) {
    result.violations.push_back("compute product " + fmt(p.compute) + " != budget " +
                                fmt(space.compute_budget));
  }
  if (p.memory < space.memory_budget_lo || p.memory > space.memory_budget_hi) {
    result.violations.push_back("memory product " + fmt(p.memory) + " outside [" +
                                fmt(space.memory_budget_lo) + ", " + fmt(space.memory_budget_hi) + "]");
  }
  return result;
}

std::int64_t count_valid_configs(const ConfigSpace& space) {
  const int n = space.num_rungs();
  std::array<int, kNumHwFields> rungs{};
  std::int64_t total = 1;
  for (std::size_t i = 0; i < kNumHwFields; ++i) total *= n;
  std::int64_t valid = 0;
  for (std::int64_t code = 0; code < total; ++code) {
    std::int64_t c = code;
    for (std::size_t i = 0; i < kNumHwFields; ++i) {
      rungs[i] = static_cast<int>(c % n);
      c /= n;
    }
    if (budgets_hold(space, products_of_rungs(space, rungs))) ++valid;
  }
  return valid;
}

HardwareConfig sample_config(const ConfigSpace& space, Rng& rng) {
  constexpr int kAttemptsBeforeCheck = 1 << 16;
  std::array<int, kNumHwFields> rungs{};
  bool checked = false;
  for (int attempt = 0;; ++attempt) {
    for (auto& r : rungs) r = uniform_index(rng, space.num_rungs());
    if (budgets_hold(space, products_of_rungs(space, rungs))) return space.config_from_rungs(rungs);
    if (!checked && attempt >= kAttemptsBeforeCheck) {
      if (count_valid_configs(space) == 0) {
        throw InfeasibleError("no ladder combination satisfies the compute and memory budgets");
      }
      checked = true;
    }
  }
}

HardwareConfig sample_config(const ConfigSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return sample_config(space, rng);
}

void to_json(nlohmann::json& j, const HardwareConfig& cfg) {
  j = nlohmann::json::object();
  for (auto f : kHwFields) j[field_name(f)] = cfg[f];
}

void from_json(const nlohmann::json& j, HardwareConfig& cfg) {
  for (auto f : kHwFields) {
    if (j.contains(field_name(f))) cfg[f] = j.at(field_name(f)).get<std::int64_t>();
  }
}

nlohmann::json config_to_json(const HardwareConfig& cfg, const ConfigSpace& space) {
  nlohmann::json normalized = nlohmann::json::object();
  for (auto f : kHwFields) normalized[field_name(f)] = space.multiplier(cfg, f);
  return {{"absolute", cfg}, {"normalized", normalized}};
}

HardwareConfig config_from_json(const nlohmann::json& j, const ConfigSpace& space) {
  if (j.contains("normalized") && !j.contains("absolute")) {
    HardwareConfig cfg = space.base;
    for (auto f : kHwFields) {
      const auto& n = j.at("normalized");
      if (!n.contains(field_name(f))) continue;
      const double m = n.at(field_name(f)).get<double>();
      cfg[f] = std::llround(static_cast<double>(space.base[f]) * m);
    }
    return cfg;
  }
  HardwareConfig cfg = space.base;
  from_json(j.contains("absolute") ? j.at("absolute") : j, cfg);
  return cfg;
}

void to_json(nlohmann::json& j, const ConfigSpace& s) {
  j = nlohmann::json{{"base", s.base},
                     {"ladder", s.ladder},
                     {"compute_budget", s.compute_budget},
                     {"memory_budget_range", {s.memory_budget_lo, s.memory_budget_hi}}};
}

void from_json(const nlohmann::json& j, ConfigSpace& s) {
  s = ConfigSpace{};
  if (j.contains("base")) from_json(j.at("base"), s.base);
  if (j.contains("ladder")) j.at("ladder").get_to(s.ladder);
  s.compute_budget = j.value("compute_budget", s.compute_budget);
  if (j.contains("memory_budget_range")) {
    const auto& r = j.at("memory_budget_range");
    if (!r.is_array() || r.size() != 2) throw ConfigError("memory_budget_range must be [lo, hi]");
    s.memory_budget_lo = r[0].get<double>();
    s.memory_budget_hi = r[1].get<double>();
  }
  s.validate();
}

void to_json(nlohmann::json& j, const Dataflow& df) {
  j = nlohmann::json{{"spatial", {{"G", df.sg}, {"I", df.si}, {"Oc", df.so}, {"Ic", df.sic}}},
                     {"temporal", {{"G", df.tg}, {"I", df.ti}, {"Oc", df.to}, {"Ic", df.tic}}},
                     {"active_nodes", df.active_nodes()}};
}

void from_json(const nlohmann::json& j, Dataflow& df) {
  const auto& s = j.at("spatial");
  const auto& t = j.at("temporal");
  df.sg = s.value("G", 1);
  df.si = s.value("I", 1);
  df.so = s.value("Oc", 1);
  df.sic = s.value("Ic", 1);
  df.tg = t.value("G", 1);
  df.ti = t.value("I", 1);
  df.to = t.value("Oc", 1);
  df.tic = t.value("Ic", 1);
}

const char* resource_name(Resource r) {
  switch (r) {
    case Resource::Compute: return "COMPUTE";
    case Resource::Dram: return "DRAM";
    case Resource::L2: return "L2";
    case Resource::L1: return "L1";
    case Resource::Ma: return "MA";
  }
  return "?";
}

std::int64_t chunk_working_set(const LayerSpec& layer, const Dataflow& df) {
  const std::int64_t cg = ceil_div(ceil_div(layer.groups, df.sg), df.tg);
  const std::int64_t ci = ceil_div(ceil_div(layer.rows, df.si), df.ti);
  const std::int64_t co = ceil_div(ceil_div(layer.out_channels, df.so), df.to);
  const std::int64_t cc = ceil_div(ceil_div(layer.reduction, df.sic), df.tic);
  return 2 * cg * (ci * cc + cc * co + ci * co) * layer.elem_bytes;
}

std::optional<std::string> dataflow_violation(const LayerSpec& layer, const HardwareConfig& cfg,
                                              const Dataflow& df) {
  const std::array<std::int64_t, 4> dims = {layer.groups, layer.rows, layer.out_channels, layer.reduction};
  const std::array<std::int64_t, 4> spatial = {df.sg, df.si, df.so, df.sic};
  const std::array<std::int64_t, 4> temporal = {df.tg, df.ti, df.to, df.tic};
  for (std::size_t d = 0; d < 4; ++d) {
    if (spatial[d] < 1 || spatial[d] > dims[d]) return "spatial factor outside [1, extent]";
    if (temporal[d] < 1 || temporal[d] > ceil_div(dims[d], spatial[d])) {
      return "temporal chunk count outside [1, per-node extent]";
    }
  }
  if (df.active_nodes() > cfg.num_nodes()) return "more active nodes than memory arrays";
  if (chunk_working_set(layer, df) > cfg.ma_mem_size) return "temporal chunk exceeds ma_mem_size";
  return std::nullopt;
}

std::int64_t compute_lower_bound(const LayerSpec& layer, const HardwareConfig& cfg) {
  return ceil_div(layer.macs(), cfg.peak_macs_per_cycle());
}

namespace detail {

namespace {

// Extent of chunk `k` when `extent` is split into `parts` ceiling-sized tiles.
inline std::int64_t tile_extent(std::int64_t extent, std::int64_t parts, std::int64_t k) {
  const std::int64_t full = ceil_div(extent, parts);
  return std::clamp<std::int64_t>(extent - k * full, 0, full);
}

}  // namespace

std::int64_t spatial_lower_bound(const LayerSpec& layer, const HardwareConfig& cfg, std::int64_t sg,
                                 std::int64_t si, std::int64_t so, std::int64_t sic) {
  const std::int64_t b = layer.elem_bytes;
  const std::int64_t eg = ceil_div(layer.groups, sg), ei = ceil_div(layer.rows, si);
  const std::int64_t eo = ceil_div(layer.out_channels, so), ec = ceil_div(layer.reduction, sic);
  const std::int64_t compute = ceil_div(eg * ei * eo * ec, cfg.ma_comp_per_core);
  const std::int64_t ma = ceil_div(eg * (ei * ec + ec * eo + ei * eo) * b, cfg.ma_bw);
  const std::int64_t uniq = layer.groups *
                            (layer.rows * layer.reduction + layer.reduction * layer.out_channels +
                             layer.rows * layer.out_channels) * b;
  return std::max({compute, ma, ceil_div(uniq, cfg.dram_bw), ceil_div(uniq, cfg.l2_bw)});
}

SpatialProfile profile_spatial(const LayerSpec& layer, const HardwareConfig& cfg, std::int64_t sg,
                               std::int64_t si, std::int64_t so, std::int64_t sic) {
  SpatialProfile p;
  p.sg = sg;
  p.si = si;
  p.so = so;
  p.sic = sic;
  const std::int64_t b = layer.elem_bytes;
  p.eg = ceil_div(layer.groups, sg);
  p.ei = ceil_div(layer.rows, si);
  p.eo = ceil_div(layer.out_channels, so);
  p.ec = ceil_div(layer.reduction, sic);
  p.node_ifm = p.eg * p.ei * p.ec * b;
  p.node_w = p.eg * p.ec * p.eo * b;
  p.node_ofm = p.eg * p.ei * p.eo * b;
  p.uniq_ifm = layer.groups * layer.rows * layer.reduction * b;
  p.uniq_w = layer.groups * layer.reduction * layer.out_channels * b;
  p.uniq_ofm = layer.groups * layer.rows * layer.out_channels * b;

  const std::int64_t m = cfg.ma_num_child;
  const std::int64_t active = sg * si * so * sic;
  const auto decoders = static_cast<std::size_t>(ceil_div(active, m));
  p.dec_ifm.assign(decoders, 0);
  p.dec_w.assign(decoders, 0);
  p.dec_out.assign(decoders, 0);

  std::vector<std::int64_t> xc(static_cast<std::size_t>(sic));
  for (std::int64_t kc = 0; kc < sic; ++kc) xc[static_cast<std::size_t>(kc)] = tile_extent(layer.reduction, sic, kc);

  std::int64_t node = 0;
  for (std::int64_t kg = 0; kg < sg; ++kg) {
    const std::int64_t xg = tile_extent(layer.groups, sg, kg);
    for (std::int64_t ki = 0; ki < si; ++ki) {
      const std::int64_t xi = tile_extent(layer.rows, si, ki);
      for (std::int64_t ko = 0; ko < so; ++ko) {
        const std::int64_t xo = tile_extent(layer.out_channels, so, ko);
        const std::int64_t ofm = xg * xi * xo * b;
        const std::int64_t first = node;
        for (std::int64_t kc = 0; kc < sic; ++kc, ++node) {
          const std::int64_t c = xc[static_cast<std::size_t>(kc)];
          const auto d = static_cast<std::size_t>(node / m);
          const std::int64_t ifm = xg * xi * c * b;
          const std::int64_t w = xg * c * xo * b;
          p.dec_ifm[d] += ifm;
          p.dec_w[d] += w;
          p.dec_out[d] += ofm;
          p.sum_ifm += ifm;
          p.sum_w += w;
          p.sum_out += ofm;
        }
        if (sic > 1) {
          // Partial OFMs of a reduction group meet at the lowest common decoder.
          const std::int64_t red = (sic - 1) * ofm;
          if (first / m == (node - 1) / m) {
            p.dec_out[static_cast<std::size_t>(first / m)] += red;
            p.local_reduction += red;
          } else {
            p.inter_l1_reduction += red;
          }
        }
      }
    }
  }
  return p;
}

LayerCycles evaluate_temporal(const SpatialProfile& p, const HardwareConfig& cfg, std::int64_t ti,
                              std::int64_t to) {
  LayerCycles r;
  auto& t = r.terms;
  t.compute = ceil_div(p.eg * p.ei * p.eo * p.ec, cfg.ma_comp_per_core);
  t.ma = ceil_div(p.node_ifm * to + p.node_w * ti + p.node_ofm, cfg.ma_bw);
  std::int64_t l1_max = 0;
  std::int64_t l1_sum = 0;
  for (std::size_t d = 0; d < p.dec_ifm.size(); ++d) {
    const std::int64_t traffic = p.dec_ifm[d] * to + p.dec_w[d] * ti + p.dec_out[d];
    l1_max = std::max(l1_max, traffic);
    l1_sum += traffic;
  }
  t.l1 = ceil_div(l1_max, cfg.l1_bw);
  const std::int64_t unique = p.uniq_ifm * to + p.uniq_w * ti + p.uniq_ofm;
  t.l2 = ceil_div(unique + p.inter_l1_reduction, cfg.l2_bw);
  t.dram = ceil_div(unique, cfg.dram_bw);

  r.bytes.ma = p.sum_ifm * to + p.sum_w * ti + p.sum_out;
  r.bytes.l1 = l1_sum;
  r.bytes.l2 = unique + p.inter_l1_reduction;
  r.bytes.dram = unique;

  // Ties resolve in this order.
  const std::array<std::pair<std::int64_t, Resource>, 5> terms = {{{t.compute, Resource::Compute},
                                                                    {t.dram, Resource::Dram},
                                                                    {t.l2, Resource::L2},
                                                                    {t.l1, Resource::L1},
                                                                    {t.ma, Resource::Ma}}};
  r.cycles = terms[0].first;
  r.binding = terms[0].second;
  for (const auto& [cycles, res] : terms) {
    if (cycles > r.cycles) {
      r.cycles = cycles;
      r.binding = res;
    }
  }
  r.cycles = std::max<std::int64_t>(r.cycles, 1);
  return r;
}

}  // namespace detail

LayerCycles simulate_layer(const LayerSpec& layer, const HardwareConfig& cfg, const Dataflow& df) {
  layer.validate();
  if (!cfg.is_positive()) throw ConfigError("hardware configuration must be strictly positive");
  if (auto why = dataflow_violation(layer, cfg, df)) {
    throw InfeasibleError("layer '" + layer.name + "': infeasible dataflow (" + *why + ")");
  }
  const auto profile = detail::profile_spatial(layer, cfg, df.sg, df.si, df.so, df.sic);
  return detail::evaluate_temporal(profile, cfg, df.ti, df.to);
}

void CycleReport::write_csv(std::ostream& os) const {
  os << "layer,cycles,binding,dram_bytes,l2_bytes,l1_bytes,ma_bytes\n";
  for (const auto& l : per_layer) {
    os << l.name << ',' << l.cycles << ',' << resource_name(l.binding) << ',' << l.bytes.dram << ','
       << l.bytes.l2 << ',' << l.bytes.l1 << ',' << l.bytes.ma << '\n';
  }
}

CycleReport simulate(const std::vector<LayerSpec>& layers, const HardwareConfig& cfg,
                     const DataflowOracle& compiler) {
  CycleReport report;
  report.per_layer.reserve(layers.size());
  for (const auto& layer : layers) {
    const Dataflow df = compiler(layer, cfg);
    const LayerCycles lc = simulate_layer(layer, cfg, df);
    report.per_layer.push_back({layer.name, lc.cycles, lc.binding, lc.bytes, df});
    report.total_cycles += lc.cycles;
    report.total_bytes += lc.bytes;
  }
  return report;
}

}  // namespace cimnet
