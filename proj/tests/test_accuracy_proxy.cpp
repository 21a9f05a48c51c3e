#include <doctest.h>

#include <cmath>

#include "cimnet/accuracy_proxy.hpp"

using namespace cimnet;

TEST_CASE("saturating curve") {
  CHECK(proxy_accuracy_from_params(0, 1e6, 0.8) == 0.0);
  CHECK(proxy_accuracy_from_params(1e6, 1e6, 0.8) == doctest::Approx(0.8 * (1 - std::exp(-1.0))));
  CHECK(proxy_accuracy_from_params(1e12, 1e6, 0.8) == doctest::Approx(0.8));
  double prev = -1;
  for (double p = 0; p < 5e7; p += 1e6) {
    const double a = proxy_accuracy_from_params(p, 12e6, 0.82);
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("proxy accuracy is bounded, deterministic and seed-sensitive") {
  const ProxyParams params;
  for (auto space : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    CAPTURE(space.name);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto arch = sample_subnet(space, seed);
      const double a = proxy_accuracy(space, arch, params);
      CHECK(a >= 0.0);
      CHECK(a <= params.ceiling + params.perturbation);
      CHECK(a == proxy_accuracy(space, arch, params));
      const double base = proxy_accuracy_from_params(double(count_params(space, arch)), params.capacity(space.family),
                                                     params.ceiling);
      CHECK(std::abs(a - base) <= params.perturbation + 1e-15);
    }
    CHECK(proxy_accuracy(space, minimal_subnet(space), params) < proxy_accuracy(space, maximal_subnet(space), params));
  }
  auto other = params;
  other.seed = 1;
  const auto space = resnet50_space();
  const auto arch = canonical_subnet(space);
  CHECK(proxy_accuracy(space, arch, other) != proxy_accuracy(space, arch, params));
}

TEST_CASE("proxy parameters validate and round trip") {
  ProxyParams p;
  p.capacity_vit = 3e7;
  const nlohmann::json j = p;
  const auto back = j.get<ProxyParams>();
  CHECK(back.capacity_vit == 3e7);
  CHECK(back.ceiling == p.ceiling);
  p.ceiling = 1.5;
  CHECK_THROWS(p.validate());
  CHECK_THROWS(nlohmann::json{{"perturbation", -1}}.get<ProxyParams>());
}
