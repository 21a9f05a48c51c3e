#pragma once

#include <cstdint>

#include <json.hpp>

#include "cimnet/workload.hpp"

namespace cimnet {

// Synthetic stand-in for top-1 accuracy. Every value it produces is a PROXY:
// a saturating function of parameter count plus a small deterministic
// per-architecture perturbation. It carries no information about real
// ImageNet accuracy.
struct ProxyParams {
  double ceiling = 0.82;
  // Parameter count at which the curve reaches 1 - 1/e of the ceiling.
  double capacity_mbv3 = 2.0e6;
  double capacity_resnet = 12.0e6;
  double capacity_vit = 40.0e6;
  double perturbation = 0.002;
  std::uint64_t seed = 0x5eed;

  double capacity(Family family) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const ProxyParams& p);
void from_json(const nlohmann::json& j, ProxyParams& p);

double proxy_accuracy_from_params(double params, double capacity, double ceiling);

// Deterministic, hardware-independent, in [0, ceiling + perturbation].
double proxy_accuracy(const ArchSpace& space, const SubnetArch& arch, const ProxyParams& params);

}  // namespace cimnet
