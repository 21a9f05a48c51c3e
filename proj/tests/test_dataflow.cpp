#include <doctest.h>

#include <algorithm>

#include "cimnet/dataflow.hpp"
#include "helpers.hpp"

using namespace cimnet;
using cimnet::testing::small_machine;

TEST_CASE("factor ladder: powers of two plus the extent, capped") {
  CHECK(factor_ladder(1, 8) == std::vector<std::int64_t>{1});
  CHECK(factor_ladder(12, 64) == std::vector<std::int64_t>{1, 2, 4, 8, 12});
  CHECK(factor_ladder(16, 64) == std::vector<std::int64_t>{1, 2, 4, 8, 16});
  CHECK(factor_ladder(100, 8) == std::vector<std::int64_t>{1, 2, 4, 8});
}

TEST_CASE("spatial enumeration") {
  SUBCASE("G equal to the node count saturates the nodes with G") {
    const auto tiles = enumerate_spatial_tiles(LayerSpec{"l", 16, 32, 32, 32, 1}, small_machine(4, 4));
    REQUIRE_FALSE(tiles.empty());
    for (const auto& t : tiles) CHECK(t == SpatialTile{16, 1, 1, 1});
  }
  SUBCASE("G = 1 keeps sg = 1") {
    const auto tiles = enumerate_spatial_tiles(LayerSpec{"l", 1, 32, 32, 32, 1}, small_machine(2, 4));
    CHECK(tiles.size() > 1);
    for (const auto& t : tiles) CHECK(t[0] == 1);
  }
  SUBCASE("single node admits only the trivial split") {
    const auto tiles = enumerate_spatial_tiles(LayerSpec{"l", 3, 32, 32, 32, 1}, small_machine(1, 1));
    REQUIRE(tiles.size() == 1);
    CHECK(tiles[0] == SpatialTile{1, 1, 1, 1});
  }
  SUBCASE("products never exceed the node count and factors stay on the ladder") {
    const LayerSpec layer{"l", 2, 12, 20, 9, 1};
    const auto cfg = small_machine(2, 4);
    for (const auto& t : enumerate_spatial_tiles(layer, cfg)) {
      CHECK(t[0] * t[1] * t[2] * t[3] <= cfg.num_nodes());
      const auto in = [](std::int64_t v, const std::vector<std::int64_t>& l) {
        return std::find(l.begin(), l.end(), v) != l.end();
      };
      CHECK(in(t[1], factor_ladder(12, 8)));
      CHECK(in(t[2], factor_ladder(9, 8)));
      CHECK(in(t[3], factor_ladder(20, 8)));
    }
  }
}

TEST_CASE("temporal enumeration") {
  const SpatialTile whole{1, 1, 1, 1};
  SUBCASE("a tile that fits needs no chunking") {
    const LayerSpec layer{"l", 1, 8, 8, 8, 1};
    const auto tiles = enumerate_temporal_tiles(layer, small_machine(1, 1, 4096), whole);
    CHECK(std::find(tiles.begin(), tiles.end(), TemporalTile{1, 1, 1, 1}) != tiles.end());
  }
  SUBCASE("memory below one element of each operand gives nothing") {
    const LayerSpec layer{"l", 1, 8, 8, 8, 1};
    CHECK(enumerate_temporal_tiles(layer, small_machine(1, 1, 5), whole).empty());
  }
  SUBCASE("2.5x oversized tile chunkable only along Ic needs tic = 4") {
    // Working set with Ic chunks of c: 2 * (c + c + 1) bytes. Whole tile
    // (c = 312) is 1250 bytes = 2.5 x 500. tic = 2 -> 626 > 500, tic = 4 -> 314.
    const LayerSpec layer{"l", 1, 1, 312, 1, 1};
    const auto tiles = enumerate_temporal_tiles(layer, small_machine(1, 1, 500), whole);
    REQUIRE_FALSE(tiles.empty());
    std::int64_t smallest = 1 << 30;
    for (const auto& t : tiles) {
      CHECK(t[0] == 1);
      CHECK(t[1] == 1);
      CHECK(t[2] == 1);
      smallest = std::min(smallest, t[3]);
    }
    CHECK(smallest == 4);
  }
  SUBCASE("every listed chunking fits") {
    const LayerSpec layer{"l", 3, 40, 50, 24, 2};
    const auto cfg = small_machine(1, 2, 2048);
    const SpatialTile sp{1, 1, 2, 1};
    const auto tiles = enumerate_temporal_tiles(layer, cfg, sp);
    REQUIRE_FALSE(tiles.empty());
    for (const auto& t : tiles) {
      const Dataflow df{sp[0], sp[1], sp[2], sp[3], t[0], t[1], t[2], t[3]};
      CHECK(chunk_working_set(layer, df) <= cfg.ma_mem_size);
    }
  }
}

TEST_CASE("compile_dataflow") {
  SUBCASE("compute-dominated layer uses every node") {
    auto cfg = small_machine(2, 4);
    cfg.ma_comp_per_core = 1;
    cfg.dram_bw = cfg.l2_bw = cfg.l1_bw = cfg.ma_bw = 1 << 20;
    const LayerSpec layer{"l", 1, 64, 64, 64, 1};
    CHECK(compile_dataflow(layer, cfg).active_nodes() == cfg.num_nodes());
  }
  SUBCASE("single-node machine") {
    const auto df = compile_dataflow(LayerSpec{"l", 2, 20, 20, 20, 1}, small_machine(1, 1));
    CHECK(df.active_nodes() == 1);
  }
  SUBCASE("argmin over every enumerated option, feasible and deterministic") {
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      const LayerSpec layer{"l", 1 + uniform_index(rng, 4), 1 + uniform_index(rng, 32), 1 + uniform_index(rng, 32),
                            1 + uniform_index(rng, 32), 1};
      const auto cfg = small_machine(1 + uniform_index(rng, 2), 1 << uniform_index(rng, 3), 64 << uniform_index(rng, 6));
      const auto options = enumerate_tile_options(layer, cfg);
      if (options.empty()) {
        CHECK_THROWS_AS(compile_dataflow(layer, cfg), InfeasibleError);
        continue;
      }
      const auto df = compile_dataflow(layer, cfg);
      const auto best = simulate_layer(layer, cfg, df);
      for (const auto& o : options) CHECK(best.cycles <= o.result.cycles);
      CHECK(chunk_working_set(layer, df) <= cfg.ma_mem_size);
      CHECK(compile_dataflow(layer, cfg) == df);
    }
  }
  SUBCASE("caching compiler agrees with the plain compiler") {
    CachingCompiler cache;
    const LayerSpec layer{"l", 4, 49, 72, 24, 1};
    const auto cfg = small_machine(2, 2, 4096);
    CHECK(cache(layer, cfg) == compile_dataflow(layer, cfg));
    CHECK(cache(layer, cfg) == compile_dataflow(layer, cfg));
    CHECK(cache.size() == 1);
  }
}

TEST_CASE("dataflow JSON round trip") {
  const Dataflow df{2, 1, 4, 1, 1, 2, 1, 8};
  const nlohmann::json j = df;
  CHECK(j.get<Dataflow>() == df);
  CHECK(j.at("active_nodes") == 8);
}
