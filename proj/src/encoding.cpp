#include "cimnet/encoding.hpp"

#include <cstdio>

namespace cimnet {

namespace {

struct Choices {
  std::vector<int> arch;  // -1 for inactive block slots
  std::array<int, kNumHwFields> rungs{};
};

bool slot_active(const Segment& seg, const std::vector<int>& arch_idx, const GenomeLayout& layout,
                 const ArchSpace& space) {
  if (seg.gating_stage < 0) return true;
  // The gating depth segment is the first segment of its stage.
  std::size_t depth_seg = 0;
  for (std::size_t s = 0; s < layout.num_arch_segments; ++s) {
    const auto& cand = layout.segments[s];
    if (cand.gating_stage < 0 && cand.name == "stage" + std::to_string(seg.gating_stage) + ".depth") {
      depth_seg = s;
      break;
    }
  }
  const int depth = space.depth_options[static_cast<std::size_t>(arch_idx[depth_seg])];
  return seg.block < depth;
}

Genome to_bits(const Choices& c, const GenomeLayout& layout) {
  Genome g;
  g.bits.assign(layout.length, 0);
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    const auto& seg = layout.segments[s];
    const int idx = seg.hardware ? c.rungs[s - layout.num_arch_segments] : c.arch[s];
    if (idx >= 0) g.bits[seg.offset + static_cast<std::size_t>(idx)] = 1;
  }
  return g;
}

Choices choices_of(const SubnetArch& arch, const HardwareConfig& cfg, const GenomeSpace& space) {
  Choices c;
  c.arch = arch_to_indices(space.arch, arch);
  c.rungs = space.config.rungs_of(cfg);
  return c;
}

// Parses one-hot segments without budget or frozen checks.
Choices parse_bits(const Genome& g, const GenomeLayout& layout, const GenomeSpace& space) {
  if (g.bits.size() != layout.length) {
    throw GenomeError(GenomeError::Kind::Malformed,
                      "genome length " + std::to_string(g.bits.size()) + " != " + std::to_string(layout.length));
  }
  Choices c;
  c.arch.assign(layout.num_arch_segments, -1);
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    const auto& seg = layout.segments[s];
    int idx = -1;
    for (int k = 0; k < seg.length; ++k) {
      const auto bit = g.bits[seg.offset + static_cast<std::size_t>(k)];
      if (bit > 1) throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": bit value not 0/1");
      if (bit == 0) continue;
      if (idx >= 0) throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": more than one bit set");
      idx = k;
    }
    if (seg.hardware) {
      if (idx < 0) throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": no bit set");
      c.rungs[s - layout.num_arch_segments] = idx;
    } else {
      c.arch[s] = idx;
    }
  }
  for (std::size_t s = 0; s < layout.num_arch_segments; ++s) {
    const auto& seg = layout.segments[s];
    if (seg.gating_stage < 0) {
      if (c.arch[s] < 0) throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": no bit set");
      continue;
    }
    const bool active = slot_active(seg, c.arch, layout, space.arch);
    if (active && c.arch[s] < 0) {
      throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": active segment has no bit set");
    }
    if (!active && c.arch[s] >= 0) {
      throw GenomeError(GenomeError::Kind::Malformed, seg.name + ": inactive segment must be all-zero");
    }
  }
  return c;
}

bool hardware_ok(const std::array<int, kNumHwFields>& rungs, const GenomeSpace& space) {
  const HardwareConfig cfg = space.config.config_from_rungs(rungs);
  if (space.frozen_config) return cfg == *space.frozen_config;
  return validate_config(cfg, space.config).ok();
}

// Gives every active block slot a value and clears inactive ones.
void settle_arch(std::vector<int>& idx, const GenomeLayout& layout, const GenomeSpace& space, Rng& rng,
                 const std::vector<int>* fallback) {
  for (std::size_t s = 0; s < layout.num_arch_segments; ++s) {
    const auto& seg = layout.segments[s];
    if (seg.gating_stage < 0) continue;
    if (!slot_active(seg, idx, layout, space.arch)) {
      idx[s] = -1;
    } else if (idx[s] < 0) {
      idx[s] = (fallback && (*fallback)[s] >= 0) ? (*fallback)[s] : uniform_index(rng, seg.length);
    }
  }
}

}  // namespace

GenomeLayout genome_layout(const GenomeSpace& space) {
  GenomeLayout layout;
  std::size_t offset = 0;
  for (const auto& v : arch_variables(space.arch)) {
    layout.segments.push_back({v.name, offset, v.num_options, false, v.gating_stage, v.block});
    offset += static_cast<std::size_t>(v.num_options);
  }
  layout.num_arch_segments = layout.segments.size();
  for (auto f : kHwFields) {
    layout.segments.push_back({field_name(f), offset, space.config.num_rungs(), true, -1, -1});
    offset += static_cast<std::size_t>(space.config.num_rungs());
  }
  layout.length = offset;
  return layout;
}

nlohmann::json GenomeLayout::schema(const GenomeSpace& space) const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : segments) {
    nlohmann::json js{{"name", seg.name},
                      {"offset", seg.offset},
                      {"length", seg.length},
                      {"kind", seg.hardware ? "hardware" : "architecture"}};
    if (seg.gating_stage >= 0) {
      js["gated_by"] = "stage" + std::to_string(seg.gating_stage) + ".depth";
      js["active_if_depth_gt"] = seg.block;
    }
    segs.push_back(std::move(js));
  }
  return {{"family", to_string(space.arch.family)},
          {"length", length},
          {"segments", std::move(segs)},
          {"arch_space", space.arch},
          {"config_space", space.config}};
}

std::string GenomeLayout::schema_hash(const GenomeSpace& space) const {
  const std::string text = schema(space).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Genome::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

Genome Genome::from_string(const std::string& s) {
  Genome g;
  g.bits.reserve(s.size());
  for (char ch : s) {
    if (ch != '0' && ch != '1') throw GenomeError(GenomeError::Kind::Malformed, "genome string must be 0/1");
    g.bits.push_back(ch == '1');
  }
  return g;
}

std::size_t GenomeHash::operator()(const Genome& g) const noexcept {
  std::uint64_t h = 0;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < g.bits.size(); ++i) {
    word = (word << 1) | g.bits[i];
    if (i % 64 == 63) {
      h = mix64(h ^ word);
      word = 0;
    }
  }
  return static_cast<std::size_t>(mix64(h ^ word ^ g.bits.size()));
}

Genome encode(const SubnetArch& arch, const HardwareConfig& cfg, const GenomeSpace& space) {
  return to_bits(choices_of(arch, cfg, space), genome_layout(space));
}

Decoded decode(const Genome& genome, const GenomeSpace& space) {
  const auto layout = genome_layout(space);
  const Choices c = parse_bits(genome, layout, space);
  Decoded d{arch_from_indices(space.arch, c.arch), space.config.config_from_rungs(c.rungs)};
  if (space.frozen_arch && d.arch != *space.frozen_arch) {
    throw GenomeError(GenomeError::Kind::Frozen, "architecture differs from the frozen architecture");
  }
  if (space.frozen_config) {
    if (d.config != *space.frozen_config) {
      throw GenomeError(GenomeError::Kind::Frozen, "hardware differs from the frozen configuration");
    }
  } else if (auto v = validate_config(d.config, space.config); !v.ok()) {
    std::string msg = "hardware violates the budget:";
    for (const auto& s : v.violations) msg += " " + s + ";";
    throw GenomeError(GenomeError::Kind::Budget, msg);
  }
  return d;
}

Genome sample_genome(const GenomeSpace& space, Rng& rng) {
  const SubnetArch arch = space.frozen_arch ? *space.frozen_arch : sample_subnet(space.arch, rng);
  const HardwareConfig cfg = space.frozen_config ? *space.frozen_config : sample_config(space.config, rng);
  return encode(arch, cfg, space);
}

Genome mutate(const Genome& genome, double rate, const GenomeSpace& space, Rng& rng) {
  const auto layout = genome_layout(space);
  const Choices parent = parse_bits(genome, layout, space);
  Choices child = parent;
  if (!space.frozen_arch) {
    for (std::size_t s = 0; s < layout.num_arch_segments; ++s) {
      const auto& seg = layout.segments[s];
      const bool redraw = coin(rng, rate);
      const int draw = uniform_index(rng, seg.length);
      if (redraw && child.arch[s] >= 0) child.arch[s] = draw;
    }
    settle_arch(child.arch, layout, space, rng, nullptr);
  }
  if (!space.frozen_config) {
    bool repaired = false;
    for (int attempt = 0; attempt < kRepairAttempts && !repaired; ++attempt) {
      auto rungs = parent.rungs;
      for (auto& r : rungs) {
        const bool redraw = coin(rng, rate);
        const int draw = uniform_index(rng, space.config.num_rungs());
        if (redraw) r = draw;
      }
      if (hardware_ok(rungs, space)) {
        child.rungs = rungs;
        repaired = true;
      }
    }
    if (!repaired) child.rungs = parent.rungs;
  }
  return to_bits(child, layout);
}

Genome mutate(const Genome& genome, double rate, const GenomeSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return mutate(genome, rate, space, rng);
}

Genome crossover(const Genome& a, const Genome& b, const GenomeSpace& space, Rng& rng) {
  const auto layout = genome_layout(space);
  const Choices ca = parse_bits(a, layout, space);
  const Choices cb = parse_bits(b, layout, space);
  Choices child = ca;
  if (!space.frozen_arch) {
    std::vector<int> other(ca.arch.size());
    for (std::size_t s = 0; s < layout.num_arch_segments; ++s) {
      const bool take_b = coin(rng, 0.5);
      child.arch[s] = take_b ? cb.arch[s] : ca.arch[s];
      other[s] = take_b ? ca.arch[s] : cb.arch[s];
    }
    settle_arch(child.arch, layout, space, rng, &other);
  }
  if (!space.frozen_config) {
    bool repaired = false;
    for (int attempt = 0; attempt < kRepairAttempts && !repaired; ++attempt) {
      std::array<int, kNumHwFields> rungs{};
      for (std::size_t i = 0; i < kNumHwFields; ++i) rungs[i] = coin(rng, 0.5) ? cb.rungs[i] : ca.rungs[i];
      if (hardware_ok(rungs, space)) {
        child.rungs = rungs;
        repaired = true;
      }
    }
    if (!repaired) child.rungs = ca.rungs;
  }
  return to_bits(child, layout);
}

Genome crossover(const Genome& a, const Genome& b, const GenomeSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return crossover(a, b, space, rng);
}

}  // namespace cimnet
