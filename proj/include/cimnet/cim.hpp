#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimnet/rng.hpp"
#include "cimnet/workload.hpp"

namespace cimnet {

// The eight elastic hardware variables, in genome order.
enum class HwField {
  DramBw,
  L2Bw,
  L1Bw,
  L1NumChild,
  MaBw,
  MaMemSize,
  MaNumChild,
  MaCompPerCore,
};

inline constexpr std::size_t kNumHwFields = 8;
inline constexpr std::array<HwField, kNumHwFields> kHwFields = {
    HwField::DramBw, HwField::L2Bw,      HwField::L1Bw,       HwField::L1NumChild,
    HwField::MaBw,   HwField::MaMemSize, HwField::MaNumChild, HwField::MaCompPerCore};

const char* field_name(HwField field);
HwField field_from_name(const std::string& name);

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Absolute machine description. Bandwidths are bytes/cycle, memory is bytes
// per array, compute is MACs/cycle per array core.
struct HardwareConfig {
  std::int64_t dram_bw = 64;
  std::int64_t l2_bw = 128;
  std::int64_t l1_bw = 32;
  std::int64_t l1_num_child = 16;
  std::int64_t ma_bw = 16;
  std::int64_t ma_mem_size = 64 * 1024;
  std::int64_t ma_num_child = 16;
  std::int64_t ma_comp_per_core = 128;

  std::int64_t& operator[](HwField f);
  std::int64_t operator[](HwField f) const;

  std::int64_t num_nodes() const { return l1_num_child * ma_num_child; }
  std::int64_t peak_macs_per_cycle() const { return num_nodes() * ma_comp_per_core; }
  // All fields strictly positive.
  bool is_positive() const;

  bool operator==(const HardwareConfig&) const = default;
};

std::ostream& operator<<(std::ostream& os, const HardwareConfig& cfg);

struct ConfigSpace {
  HardwareConfig base;
  std::vector<double> ladder = {0.125, 0.25, 0.5, 1.0};
  // Target for the normalized l1_num_child * ma_num_child * ma_comp_per_core.
  double compute_budget = 0.125;
  // Bounds for the normalized l1_num_child * ma_num_child * ma_mem_size.
  double memory_budget_lo = 0.25;
  double memory_budget_hi = 0.5;

  int num_rungs() const { return static_cast<int>(ladder.size()); }
  // Absolute value of `field` at ladder rung `rung`.
  std::int64_t value_at(HwField field, int rung) const;
  // Rung index holding `value`, or nullopt when off-ladder.
  std::optional<int> rung_of(HwField field, std::int64_t value) const;
  HardwareConfig config_from_rungs(const std::array<int, kNumHwFields>& rungs) const;
  // Throws ConfigError for off-ladder fields.
  std::array<int, kNumHwFields> rungs_of(const HardwareConfig& cfg) const;
  // Normalized multiplier of `field` (value / base).
  double multiplier(const HardwareConfig& cfg, HwField field) const;
  void validate() const;
};

ConfigSpace default_config_space();

// Table-4 placements of the static configuration on the default ladder.
HardwareConfig static_config(const ConfigSpace& space);

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_config(const HardwareConfig& cfg, const ConfigSpace& space);

// Uniform over the budget-satisfying ladder grid (rejection sampling).
// Throws InfeasibleError if no combination satisfies the budgets.
HardwareConfig sample_config(const ConfigSpace& space, std::uint64_t seed);
HardwareConfig sample_config(const ConfigSpace& space, Rng& rng);

// Number of budget-satisfying ladder combinations (exhaustive count).
std::int64_t count_valid_configs(const ConfigSpace& space);

void to_json(nlohmann::json& j, const HardwareConfig& cfg);
void from_json(const nlohmann::json& j, HardwareConfig& cfg);
// Serialized with both absolute values and normalized multipliers.
nlohmann::json config_to_json(const HardwareConfig& cfg, const ConfigSpace& space);
// Accepts either {"absolute": {...}} / flat absolute fields or
// {"normalized": {...}} multipliers resolved against the space.
HardwareConfig config_from_json(const nlohmann::json& j, const ConfigSpace& space);
void to_json(nlohmann::json& j, const ConfigSpace& space);
void from_json(const nlohmann::json& j, ConfigSpace& space);

// Spatial split of (G, I, Oc, Ic) across nodes and temporal chunk counts of
// the per-node tile.
struct Dataflow {
  std::int64_t sg = 1, si = 1, so = 1, sic = 1;
  std::int64_t tg = 1, ti = 1, to = 1, tic = 1;

  std::int64_t active_nodes() const { return sg * si * so * sic; }
  std::int64_t temporal_steps() const { return tg * ti * to * tic; }
  auto key() const { return std::array<std::int64_t, 8>{sg, si, so, sic, tg, ti, to, tic}; }

  bool operator==(const Dataflow&) const = default;
};

void to_json(nlohmann::json& j, const Dataflow& df);
void from_json(const nlohmann::json& j, Dataflow& df);

enum class Resource { Compute, Dram, L2, L1, Ma };
const char* resource_name(Resource r);

struct BytesPerLevel {
  std::int64_t dram = 0;
  std::int64_t l2 = 0;
  std::int64_t l1 = 0;
  std::int64_t ma = 0;

  BytesPerLevel& operator+=(const BytesPerLevel& o) {
    dram += o.dram;
    l2 += o.l2;
    l1 += o.l1;
    ma += o.ma;
    return *this;
  }
  bool operator==(const BytesPerLevel&) const = default;
};

// Per-resource roofline terms of one layer under one dataflow.
struct RooflineTerms {
  std::int64_t compute = 0, dram = 0, l2 = 0, l1 = 0, ma = 0;
};

struct LayerCycles {
  std::int64_t cycles = 0;
  Resource binding = Resource::Compute;
  BytesPerLevel bytes;
  RooflineTerms terms;
};

// Working set of one temporal chunk (double-buffered), in bytes.
std::int64_t chunk_working_set(const LayerSpec& layer, const Dataflow& df);
// Empty when the dataflow fits the machine, otherwise the reason.
std::optional<std::string> dataflow_violation(const LayerSpec& layer, const HardwareConfig& cfg,
                                              const Dataflow& df);

// Perfect-overlap roofline over COMPUTE, DRAM, L2, L1 and MA. Throws
// InfeasibleError when `df` does not fit `cfg`.
LayerCycles simulate_layer(const LayerSpec& layer, const HardwareConfig& cfg, const Dataflow& df);

std::int64_t compute_lower_bound(const LayerSpec& layer, const HardwareConfig& cfg);

struct LayerReport {
  std::string name;
  std::int64_t cycles = 0;
  Resource binding = Resource::Compute;
  BytesPerLevel bytes;
  Dataflow dataflow;
};

struct CycleReport {
  std::int64_t total_cycles = 0;
  std::vector<LayerReport> per_layer;
  BytesPerLevel total_bytes;

  void write_csv(std::ostream& os) const;
};

using DataflowOracle = std::function<Dataflow(const LayerSpec&, const HardwareConfig&)>;

// Layers run back to back; every layer gets the oracle's dataflow.
CycleReport simulate(const std::vector<LayerSpec>& layers, const HardwareConfig& cfg,
                     const DataflowOracle& compiler);

}  // namespace cimnet
