#include <doctest.h>

#include <map>

#include "cimnet/workload.hpp"

using namespace cimnet;

TEST_CASE("conv lowering follows the grouped-matmul formula") {
  SUBCASE("3x3 conv on 56x56, 64 -> 64 channels") {
    const auto l = lower_conv("c", 1, 56, 56, 64, 64, 3, 1, 1, 1);
    CHECK(l.groups == 1);
    CHECK(l.rows == 56 * 56);
    CHECK(l.reduction == 64 * 9);
    CHECK(l.out_channels == 64);
  }
  SUBCASE("depthwise conv") {
    const auto l = lower_conv("dw", 1, 28, 28, 96, 96, 3, 1, 96, 1);
    CHECK(l.groups == 96);
    CHECK(l.reduction == 9);
    CHECK(l.out_channels == 1);
  }
  SUBCASE("pointwise conv keeps Ic = Cin") {
    const auto l = lower_conv("pw", 1, 14, 14, 40, 120, 1, 1, 1, 1);
    CHECK(l.reduction == 40);
  }
  SUBCASE("stride rounds the output up") {
    const auto l = lower_conv("s2", 1, 7, 7, 8, 8, 3, 2, 1, 1);
    CHECK(l.rows == 4 * 4);
  }
  SUBCASE("channels not divisible by groups are rejected") {
    CHECK_THROWS_AS(lower_conv("bad", 1, 8, 8, 10, 12, 3, 1, 4, 1), WorkloadError);
  }
}

TEST_CASE("MAC and parameter counts") {
  const LayerSpec a{"a", 1, 4, 8, 8, 1};
  CHECK(count_macs(std::vector<LayerSpec>{a}) == 256);
  CHECK(count_macs(std::vector<LayerSpec>{}) == 0);
  CHECK(count_macs(std::vector<LayerSpec>{a, a}) == 512);

  const LayerSpec conv{"conv", 1, 3136, 576, 64, 1};
  const LayerSpec dw{"dw", 64, 3136, 9, 1, 1};
  CHECK(count_params(std::vector<LayerSpec>{conv}) == 36864);
  CHECK(count_params(std::vector<LayerSpec>{dw}) == 576);
}

TEST_CASE("layer spec validation") {
  CHECK_NOTHROW(LayerSpec{"ok", 1, 1, 1, 1, 2}.validate());
  CHECK_THROWS(LayerSpec{"zero", 0, 1, 1, 1, 1}.validate());
  CHECK_THROWS(LayerSpec{"bytes", 1, 1, 1, 1, 3}.validate());
}

TEST_CASE("sampling is in-range, deterministic and uniform") {
  const auto vit = vit_b_space();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = sample_subnet(vit, seed);
    CHECK((a.num_layers >= 10 && a.num_layers <= 12));
    CHECK(a == sample_subnet(vit, seed));
  }
  std::map<int, int> freq;
  Rng rng(11);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++freq[sample_subnet(vit, rng).num_layers];
  CHECK(freq.size() == 3);
  for (const auto& [value, count] : freq) {
    const double f = static_cast<double>(count) / n;
    CHECK(f >= 0.30);
    CHECK(f <= 0.37);
  }
}

TEST_CASE("lowering is total and consistent on sampled subnets") {
  for (auto space : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    CAPTURE(space.name);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto arch = sample_subnet(space, seed);
      CHECK_NOTHROW(validate_subnet(space, arch));
      const auto layers = lower_to_layers(space, arch);
      REQUIRE_FALSE(layers.empty());
      std::int64_t macs = 0;
      for (const auto& l : layers) {
        CHECK_NOTHROW(l.validate());
        macs += l.groups * l.rows * l.reduction * l.out_channels;
      }
      CHECK(count_macs(space, arch) == macs);
    }
  }
}

TEST_CASE("ViT layer count grows linearly with depth") {
  const auto space = vit_b_space();
  auto arch = canonical_subnet(space);
  std::vector<std::size_t> sizes;
  for (int layers : {10, 11, 12}) {
    arch.num_layers = layers;
    sizes.push_back(lower_to_layers(space, arch).size());
  }
  CHECK(sizes[1] - sizes[0] == sizes[2] - sizes[1]);
  CHECK(sizes[1] > sizes[0]);
}

TEST_CASE("widening a block never lowers the parameter count") {
  for (auto space : {mobilenet_v3_space(), resnet50_space()}) {
    const auto base = maximal_subnet(space);
    auto narrow = base;
    for (std::size_t i = 0; i < narrow.width.size(); ++i) {
      auto wider = narrow;
      narrow.width[i] = space.width_options.front();
      CHECK(count_params(space, narrow) <= count_params(space, wider));
    }
  }
}

TEST_CASE("minimal subnet has fewer parameters than the maximal one") {
  for (auto space : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    CHECK(count_params(space, minimal_subnet(space)) < count_params(space, maximal_subnet(space)));
  }
}

TEST_CASE("arch spaces and subnets round-trip through JSON") {
  for (auto space : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    const nlohmann::json j = space;
    CHECK(j.get<ArchSpace>() == space);
    const auto arch = sample_subnet(space, 5);
    const nlohmann::json ja = arch;
    CHECK(ja.get<SubnetArch>() == arch);
  }
}

TEST_CASE("arch space validation rejects unsorted or empty option lists") {
  auto space = mobilenet_v3_space();
  CHECK_NOTHROW(space.validate());
  space.kernel_options = {5, 3, 7};
  CHECK_THROWS_AS(space.validate(), WorkloadError);
  space = vit_b_space();
  space.head_options.clear();
  CHECK_THROWS_AS(space.validate(), WorkloadError);
}

TEST_CASE("subnets with off-list values are rejected") {
  const auto space = mobilenet_v3_space();
  auto arch = canonical_subnet(space);
  arch.kernel[0] = 4;
  CHECK_THROWS_AS(validate_subnet(space, arch), WorkloadError);
  CHECK_THROWS(family_from_string("alexnet"));
}

TEST_CASE("inactive block slots do not change the lowered network") {
  const auto space = mobilenet_v3_space();
  auto arch = minimal_subnet(space);
  const auto layers = lower_to_layers(space, arch);
  // Slot 3 of stage 0 is beyond depth 2: arch_to_indices reports it as -1.
  const auto idx = arch_to_indices(space, arch);
  CHECK(std::count(idx.begin(), idx.end(), -1) > 0);
  CHECK(arch_from_indices(space, idx) == arch);
  CHECK(lower_to_layers(space, arch_from_indices(space, idx)) == layers);
}
