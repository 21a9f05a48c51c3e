#include "cimnet/accuracy_proxy.hpp"

#include <algorithm>
#include <cmath>

#include "cimnet/rng.hpp"

namespace cimnet {

double ProxyParams::capacity(Family family) const {
  switch (family) {
    case Family::MobileNetV3: return capacity_mbv3;
    case Family::ResNet: return capacity_resnet;
    case Family::ViT: return capacity_vit;
  }
  return capacity_mbv3;
}

void ProxyParams::validate() const {
  if (!(ceiling > 0.0 && ceiling < 1.0)) throw std::invalid_argument("proxy ceiling must be in (0, 1)");
  if (capacity_mbv3 <= 0 || capacity_resnet <= 0 || capacity_vit <= 0) {
    throw std::invalid_argument("proxy capacity scales must be positive");
  }
  if (perturbation < 0) throw std::invalid_argument("proxy perturbation must be >= 0");
}

void to_json(nlohmann::json& j, const ProxyParams& p) {
  j = nlohmann::json{{"ceiling", p.ceiling},
                     {"capacity", {{"mbv3", p.capacity_mbv3}, {"resnet50", p.capacity_resnet}, {"vit", p.capacity_vit}}},
                     {"perturbation", p.perturbation},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, ProxyParams& p) {
  p = ProxyParams{};
  p.ceiling = j.value("ceiling", p.ceiling);
  if (j.contains("capacity")) {
    const auto& c = j.at("capacity");
    p.capacity_mbv3 = c.value("mbv3", p.capacity_mbv3);
    p.capacity_resnet = c.value("resnet50", p.capacity_resnet);
    p.capacity_vit = c.value("vit", p.capacity_vit);
  }
  p.perturbation = j.value("perturbation", p.perturbation);
  p.seed = j.value("seed", p.seed);
  p.validate();
}

double proxy_accuracy_from_params(double params, double capacity, double ceiling) {
  return ceiling * (1.0 - std::exp(-std::max(params, 0.0) / capacity));
}

double proxy_accuracy(const ArchSpace& space, const SubnetArch& arch, const ProxyParams& params) {
  const auto indices = arch_to_indices(space, arch);
  std::uint64_t h = mix64(params.seed ^ static_cast<std::uint64_t>(space.family));
  for (int idx : indices) h = mix64(h ^ static_cast<std::uint64_t>(idx + 2));
  // 53 random bits -> [0, 1).
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  const double noise = (2.0 * u - 1.0) * params.perturbation;
  const double base = proxy_accuracy_from_params(static_cast<double>(count_params(space, arch)),
                                                 params.capacity(space.family), params.ceiling);
  return std::max(0.0, base + noise);
}

}  // namespace cimnet
