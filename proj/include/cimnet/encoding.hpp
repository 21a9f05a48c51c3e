#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimnet/cim.hpp"
#include "cimnet/rng.hpp"
#include "cimnet/workload.hpp"

namespace cimnet {

class GenomeError : public std::invalid_argument {
 public:
  enum class Kind { Malformed, Budget, Frozen };
  GenomeError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// The joint search space a genome lives in. A frozen side is held fixed at the
// given value (static architecture / static configuration settings); its
// segments are still present so the genome length never changes.
struct GenomeSpace {
  ArchSpace arch;
  ConfigSpace config;
  std::optional<SubnetArch> frozen_arch;
  std::optional<HardwareConfig> frozen_config;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  int length = 0;
  bool hardware = false;
  int gating_stage = -1;  // arch block segments: stage whose depth activates it
  int block = -1;
};

struct GenomeLayout {
  std::vector<Segment> segments;
  std::size_t length = 0;
  std::size_t num_arch_segments = 0;

  nlohmann::json schema(const GenomeSpace& space) const;
  // Stable 64-bit FNV-1a hash of the schema, hex-encoded.
  std::string schema_hash(const GenomeSpace& space) const;
};

// Architecture segments first (arch_variables order), then the eight hardware
// fields in HwField order, each one-hot over the ladder.
GenomeLayout genome_layout(const GenomeSpace& space);

struct Genome {
  std::vector<std::uint8_t> bits;

  auto operator<=>(const Genome&) const = default;
  bool operator==(const Genome&) const = default;
  std::string to_string() const;
  static Genome from_string(const std::string& s);
};

struct GenomeHash {
  std::size_t operator()(const Genome& g) const noexcept;
};

struct Decoded {
  SubnetArch arch;
  HardwareConfig config;
};

Genome encode(const SubnetArch& arch, const HardwareConfig& cfg, const GenomeSpace& space);

// Throws GenomeError: Malformed for bad segments, Budget when the hardware part
// fails validate_config, Frozen when a frozen side deviates from its value.
Decoded decode(const Genome& genome, const GenomeSpace& space);

// Uniform valid genome honoring frozen sides.
Genome sample_genome(const GenomeSpace& space, Rng& rng);

inline constexpr double kDefaultMutationRate = 0.1;
inline constexpr int kRepairAttempts = 32;

Genome mutate(const Genome& genome, double rate, const GenomeSpace& space, Rng& rng);
Genome mutate(const Genome& genome, double rate, const GenomeSpace& space, std::uint64_t seed);
Genome crossover(const Genome& a, const Genome& b, const GenomeSpace& space, Rng& rng);
Genome crossover(const Genome& a, const Genome& b, const GenomeSpace& space, std::uint64_t seed);

}  // namespace cimnet
