#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimnet/rng.hpp"

namespace cimnet {

enum class Family { MobileNetV3, ResNet, ViT };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

class WorkloadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One CNN stage of the elastic super-network. `max_depth` blocks exist in the
// layout; the sub-network's depth choice decides how many of them are active.
struct StageLayout {
  int out_channels = 0;
  int stride = 1;
  int max_depth = 4;
  // ResNet-like only: bottleneck width before the channel multiplier.
  int mid_channels = 0;

  bool operator==(const StageLayout&) const = default;
};

// Elastic architecture space. CNN spaces use the kernel/width/depth lists and
// the stage layout; the ViT space uses layers/heads/intermediate lists.
struct ArchSpace {
  Family family = Family::MobileNetV3;
  std::string name;
  int elem_bytes = 1;
  int batch = 1;

  // CNN
  std::vector<int> kernel_options;
  std::vector<double> width_options;
  std::vector<int> depth_options;
  std::vector<StageLayout> stages;
  int input_resolution = 224;
  int stem_channels = 16;
  int head_channels = 0;   // MBV3 final 1x1 expansion
  int feature_dim = 0;     // MBV3 pre-classifier linear
  int num_classes = 1000;

  // ViT
  std::vector<int> layer_options;
  std::vector<int> head_options;
  std::vector<int> intermediate_options;
  int embed_dim = 768;
  int head_dim = 64;
  int patch_size = 16;

  // Index of the static/canonical choice for every elastic variable kind.
  int canonical_kernel = 0;
  int canonical_width = 0;
  int canonical_depth = 0;
  int canonical_layers = 0;
  int canonical_heads = 0;
  int canonical_intermediate = 0;

  bool is_cnn() const { return family != Family::ViT; }
  int max_blocks() const;
  // Throws WorkloadError when an invariant is broken.
  void validate() const;

  bool operator==(const ArchSpace&) const = default;
};

ArchSpace mobilenet_v3_space();
ArchSpace resnet50_space();
ArchSpace vit_b_space();
ArchSpace builtin_space(Family family);

void to_json(nlohmann::json& j, const ArchSpace& space);
void from_json(const nlohmann::json& j, ArchSpace& space);

// Sub-network choice vector. CNN block lists are flattened stage-major with
// `max_depth` slots per stage; slots at or beyond a stage's depth are inactive
// and hold the first option.
struct SubnetArch {
  Family family = Family::MobileNetV3;
  std::vector<int> depth;
  std::vector<int> kernel;
  std::vector<double> width;
  int num_layers = 0;
  int num_heads = 0;
  int intermediate_dim = 0;

  bool operator==(const SubnetArch&) const = default;
};

void to_json(nlohmann::json& j, const SubnetArch& arch);
void from_json(const nlohmann::json& j, SubnetArch& arch);

// Generalized grouped matmul: G groups of (I x Ic) * (Ic x Oc).
struct LayerSpec {
  std::string name;
  std::int64_t groups = 1;
  std::int64_t rows = 1;         // I: batch x output positions (or tokens)
  std::int64_t reduction = 1;    // Ic: input channels per group x kernel window
  std::int64_t out_channels = 1; // Oc: output channels per group
  int elem_bytes = 1;

  std::int64_t macs() const { return groups * rows * reduction * out_channels; }
  std::int64_t weight_elems() const { return groups * reduction * out_channels; }
  void validate() const;

  bool operator==(const LayerSpec&) const = default;
};

void to_json(nlohmann::json& j, const LayerSpec& layer);
void from_json(const nlohmann::json& j, LayerSpec& layer);

// Elastic variables in genome order. For CNNs each stage contributes its depth
// followed by (kernel, width) per block slot; ViT has three global variables.
struct ElasticVariable {
  std::string name;
  int num_options = 0;
  // For CNN block variables: the stage whose depth gates this slot and the
  // slot position within the stage. -1 when always active.
  int gating_stage = -1;
  int block = -1;
};

std::vector<ElasticVariable> arch_variables(const ArchSpace& space);

// Option indices per elastic variable (same order as arch_variables), with -1
// for inactive block slots.
std::vector<int> arch_to_indices(const ArchSpace& space, const SubnetArch& arch);
SubnetArch arch_from_indices(const ArchSpace& space, const std::vector<int>& indices);

// Throws WorkloadError if any value is outside its option list.
void validate_subnet(const ArchSpace& space, const SubnetArch& arch);

SubnetArch canonical_subnet(const ArchSpace& space);
SubnetArch minimal_subnet(const ArchSpace& space);
SubnetArch maximal_subnet(const ArchSpace& space);

SubnetArch sample_subnet(const ArchSpace& space, std::uint64_t seed);
SubnetArch sample_subnet(const ArchSpace& space, Rng& rng);

// Convolution lowering helper: conv over an HxW input with Cin->Cout channels,
// square kernel k, stride s and g groups.
LayerSpec lower_conv(std::string name, int batch, int height, int width, int in_channels,
                     int out_channels, int kernel, int stride, int groups, int elem_bytes);

std::vector<LayerSpec> lower_to_layers(const ArchSpace& space, const SubnetArch& arch);

std::int64_t count_macs(const std::vector<LayerSpec>& layers);
std::int64_t count_macs(const ArchSpace& space, const SubnetArch& arch);
std::int64_t count_params(const std::vector<LayerSpec>& layers);
std::int64_t count_params(const ArchSpace& space, const SubnetArch& arch);

}  // namespace cimnet
