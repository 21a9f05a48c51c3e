#include <doctest.h>

#include "cimnet/encoding.hpp"
#include "cimnet/search.hpp"

using namespace cimnet;

namespace {

const Segment& segment(const GenomeLayout& layout, const std::string& name) {
  for (const auto& s : layout.segments) {
    if (s.name == name) return s;
  }
  throw std::out_of_range(name);
}

std::vector<GenomeSpace> all_spaces() {
  std::vector<GenomeSpace> out;
  for (auto arch : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    for (auto s : {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg,
                   SearchSetting::ElasticArchElasticCfg}) {
      out.push_back(make_genome_space(s, arch, default_config_space()));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("one-hot segment of a kernel choice") {
  const GenomeSpace space{mobilenet_v3_space(), default_config_space(), {}, {}};
  const auto layout = genome_layout(space);
  auto arch = maximal_subnet(space.arch);
  arch.kernel[0] = 5;
  const auto g = encode(arch, sample_config(space.config, 1), space);
  const auto& seg = segment(layout, "stage0.block0.kernel");
  const std::vector<std::uint8_t> bits(g.bits.begin() + static_cast<std::ptrdiff_t>(seg.offset),
                                       g.bits.begin() + static_cast<std::ptrdiff_t>(seg.offset) + seg.length);
  CHECK(bits == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("ViT genome length is the sum of option counts") {
  const GenomeSpace space{vit_b_space(), default_config_space(), {}, {}};
  CHECK(genome_layout(space).length == 3 * 3 + 8 * 4);
}

TEST_CASE("encode/decode round trip on every space") {
  for (const auto& space : all_spaces()) {
    Rng rng(17);
    const auto len = genome_layout(space).length;
    for (int i = 0; i < 100; ++i) {
      const Genome g = sample_genome(space, rng);
      CHECK(g.bits.size() == len);
      const Decoded d = decode(g, space);
      CHECK(encode(d.arch, d.config, space) == g);
      if (space.frozen_arch) CHECK(d.arch == *space.frozen_arch);
      if (space.frozen_config) CHECK(d.config == *space.frozen_config);
      if (!space.frozen_config) CHECK(validate_config(d.config, space.config).ok());
    }
  }
}

TEST_CASE("inactive block segments are all-zero") {
  const GenomeSpace space{mobilenet_v3_space(), default_config_space(), {}, {}};
  const auto layout = genome_layout(space);
  const auto g = encode(minimal_subnet(space.arch), sample_config(space.config, 3), space);
  const auto& seg = segment(layout, "stage0.block3.kernel");  // depth 2 leaves block 3 idle
  for (int k = 0; k < seg.length; ++k) CHECK(g.bits[seg.offset + static_cast<std::size_t>(k)] == 0);
}

TEST_CASE("decode errors") {
  const GenomeSpace space{vit_b_space(), default_config_space(), {}, {}};
  const auto layout = genome_layout(space);
  const Genome good = encode(canonical_subnet(space.arch), sample_config(space.config, 4), space);

  SUBCASE("two bits in one segment") {
    Genome g = good;
    g.bits[0] = 1;
    g.bits[1] = 1;
    g.bits[2] = 0;
    try {
      decode(g, space);
      FAIL("expected a malformed genome");
    } catch (const GenomeError& e) {
      CHECK(e.kind() == GenomeError::Kind::Malformed);
    }
  }
  SUBCASE("hardware product off budget") {
    Genome g = good;
    for (std::size_t s = layout.num_arch_segments; s < layout.segments.size(); ++s) {
      const auto& seg = layout.segments[s];
      for (int k = 0; k < seg.length; ++k) g.bits[seg.offset + static_cast<std::size_t>(k)] = k == seg.length - 1;
    }
    try {
      decode(g, space);
      FAIL("expected a budget violation");
    } catch (const GenomeError& e) {
      CHECK(e.kind() == GenomeError::Kind::Budget);
    }
  }
  SUBCASE("wrong length") { CHECK_THROWS_AS(decode(Genome{{1, 0}}, space), GenomeError); }
  SUBCASE("frozen side deviates") {
    const auto frozen = make_genome_space(SearchSetting::StaticArchElasticCfg, space.arch, space.config);
    Genome g = encode(minimal_subnet(space.arch), sample_config(space.config, 4), space);
    try {
      decode(g, frozen);
      FAIL("expected a frozen-side violation");
    } catch (const GenomeError& e) {
      CHECK(e.kind() == GenomeError::Kind::Frozen);
    }
  }
}

TEST_CASE("variation operators") {
  for (const auto& space : all_spaces()) {
    Rng rng(23);
    const Genome a = sample_genome(space, rng);
    CHECK(mutate(a, 0.0, space, rng) == a);
    CHECK(crossover(a, a, space, rng) == a);
  }
}

TEST_CASE("mutate and crossover outputs always decode (10,000 trials)") {
  const auto spaces = all_spaces();
  Rng rng(99);
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto& space = spaces[static_cast<std::size_t>(trial) % spaces.size()];
    const Genome a = sample_genome(space, rng);
    const Genome b = sample_genome(space, rng);
    const double rate = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    try {
      decode(mutate(a, rate, space, rng), space);
      decode(crossover(a, b, space, rng), space);
    } catch (const GenomeError&) {
      ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("seeded operators are deterministic") {
  const GenomeSpace space{resnet50_space(), default_config_space(), {}, {}};
  Rng rng(1);
  const Genome a = sample_genome(space, rng), b = sample_genome(space, rng);
  CHECK(mutate(a, 0.3, space, 42) == mutate(a, 0.3, space, 42));
  CHECK(crossover(a, b, space, 42) == crossover(a, b, space, 42));
}

TEST_CASE("genome strings and schema") {
  const GenomeSpace space{mobilenet_v3_space(), default_config_space(), {}, {}};
  Rng rng(8);
  const Genome g = sample_genome(space, rng);
  CHECK(Genome::from_string(g.to_string()) == g);
  CHECK_THROWS_AS(Genome::from_string("01x"), GenomeError);
  const auto layout = genome_layout(space);
  const auto schema = layout.schema(space);
  CHECK(schema.at("length") == layout.length);
  CHECK(schema.at("segments").size() == layout.segments.size());
  CHECK(layout.schema_hash(space) == genome_layout(space).schema_hash(space));
  const GenomeSpace vit{vit_b_space(), default_config_space(), {}, {}};
  CHECK(layout.schema_hash(space) != genome_layout(vit).schema_hash(vit));
}
