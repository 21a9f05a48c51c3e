#include "cimnet/workload.hpp"

#include <algorithm>
#include <cmath>

namespace cimnet {

namespace {

template <class T>
int index_of(const std::vector<T>& options, T value) {
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i] == value) return static_cast<int>(i);
  }
  return -1;
}

template <class T>
void check_options(const std::vector<T>& options, const char* what) {
  if (options.empty()) throw WorkloadError(std::string(what) + ": option list is empty");
  if (!std::is_sorted(options.begin(), options.end()) ||
      std::adjacent_find(options.begin(), options.end()) != options.end()) {
    throw WorkloadError(std::string(what) + ": options must be strictly ascending");
  }
}

int make_divisible(double value, int divisor) {
  int v = std::max(divisor, static_cast<int>(value + divisor / 2.0) / divisor * divisor);
  if (v < 0.9 * value) v += divisor;
  return v;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::MobileNetV3: return "mbv3";
    case Family::ResNet: return "resnet50";
    case Family::ViT: return "vit";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "mbv3" || name == "mobilenetv3") return Family::MobileNetV3;
  if (name == "resnet50" || name == "resnet") return Family::ResNet;
  if (name == "vit" || name == "vit-b") return Family::ViT;
  throw WorkloadError("unknown family '" + name + "'");
}

int ArchSpace::max_blocks() const {
  int total = 0;
  for (const auto& stage : stages) total += stage.max_depth;
  return total;
}

void ArchSpace::validate() const {
  if (elem_bytes != 1 && elem_bytes != 2 && elem_bytes != 4) {
    throw WorkloadError("elem_bytes must be 1, 2 or 4");
  }
  if (batch < 1) throw WorkloadError("batch must be >= 1");
  auto check_canonical = [](int index, std::size_t n, const char* what) {
    if (index < 0 || static_cast<std::size_t>(index) >= n) {
      throw WorkloadError(std::string(what) + ": canonical index out of range");
    }
  };
  if (is_cnn()) {
    check_options(kernel_options, "kernel_options");
    check_options(width_options, "width_options");
    check_options(depth_options, "depth_options");
    if (stages.empty()) throw WorkloadError("stages: CNN space needs at least one stage");
    for (const auto& stage : stages) {
      if (stage.out_channels < 1 || stage.stride < 1) throw WorkloadError("stages: bad stage");
      if (stage.max_depth < depth_options.back()) {
        throw WorkloadError("stages: max_depth smaller than the largest depth option");
      }
      if (family == Family::ResNet && stage.mid_channels < 1) {
        throw WorkloadError("stages: ResNet stage needs mid_channels");
      }
    }
    if (depth_options.front() < 1) throw WorkloadError("depth_options: depth must be >= 1");
    if (kernel_options.front() < 1) throw WorkloadError("kernel_options: kernel must be >= 1");
    if (width_options.front() <= 0) throw WorkloadError("width_options: must be positive");
    check_canonical(canonical_kernel, kernel_options.size(), "kernel_options");
    check_canonical(canonical_width, width_options.size(), "width_options");
    check_canonical(canonical_depth, depth_options.size(), "depth_options");
  } else {
    check_options(layer_options, "layer_options");
    check_options(head_options, "head_options");
    check_options(intermediate_options, "intermediate_options");
    if (layer_options.front() < 1 || head_options.front() < 1 || intermediate_options.front() < 1) {
      throw WorkloadError("ViT options must be positive");
    }
    if (embed_dim < 1 || head_dim < 1 || patch_size < 1 || input_resolution % patch_size != 0) {
      throw WorkloadError("ViT geometry is inconsistent");
    }
    check_canonical(canonical_layers, layer_options.size(), "layer_options");
    check_canonical(canonical_heads, head_options.size(), "head_options");
    check_canonical(canonical_intermediate, intermediate_options.size(), "intermediate_options");
  }
  if (num_classes < 1 || input_resolution < 1) throw WorkloadError("bad input/classifier geometry");
}

ArchSpace mobilenet_v3_space() {
  ArchSpace s;
  s.family = Family::MobileNetV3;
  s.name = "mbv3";
  s.kernel_options = {3, 5, 7};
  s.width_options = {3, 4, 6};
  s.depth_options = {2, 3, 4};
  s.stages = {{24, 2, 4, 0}, {40, 2, 4, 0}, {80, 2, 4, 0}, {112, 1, 4, 0}, {160, 2, 4, 0}};
  s.input_resolution = 224;
  s.stem_channels = 16;
  s.head_channels = 960;
  s.feature_dim = 1280;
  s.canonical_kernel = 1;
  s.canonical_width = 1;
  s.canonical_depth = 1;
  return s;
}

ArchSpace resnet50_space() {
  ArchSpace s;
  s.family = Family::ResNet;
  s.name = "resnet50";
  s.kernel_options = {3, 5, 7};
  s.width_options = {0.65, 0.8, 1.0};
  s.depth_options = {2, 3, 4};
  s.stages = {{256, 1, 4, 64}, {512, 2, 4, 128}, {1024, 2, 4, 256}, {2048, 2, 4, 512}};
  s.input_resolution = 224;
  s.stem_channels = 64;
  s.canonical_kernel = 1;
  s.canonical_width = 1;
  s.canonical_depth = 1;
  return s;
}

ArchSpace vit_b_space() {
  ArchSpace s;
  s.family = Family::ViT;
  s.name = "vit";
  s.layer_options = {10, 11, 12};
  s.head_options = {6, 8, 12};
  s.intermediate_options = {2048, 2560, 3072};
  s.embed_dim = 768;
  s.head_dim = 64;
  s.patch_size = 16;
  s.input_resolution = 224;
  s.canonical_layers = 2;
  s.canonical_heads = 2;
  s.canonical_intermediate = 2;
  return s;
}

ArchSpace builtin_space(Family family) {
  switch (family) {
    case Family::MobileNetV3: return mobilenet_v3_space();
    case Family::ResNet: return resnet50_space();
    case Family::ViT: return vit_b_space();
  }
  throw WorkloadError("unknown family");
}

void to_json(nlohmann::json& j, const ArchSpace& s) {
  j = nlohmann::json{{"family", to_string(s.family)},
                     {"name", s.name},
                     {"elem_bytes", s.elem_bytes},
                     {"batch", s.batch},
                     {"input_resolution", s.input_resolution},
                     {"num_classes", s.num_classes}};
  if (s.is_cnn()) {
    j["kernel_options"] = s.kernel_options;
    j["width_options"] = s.width_options;
    j["depth_options"] = s.depth_options;
    j["stem_channels"] = s.stem_channels;
    if (s.family == Family::MobileNetV3) {
      j["head_channels"] = s.head_channels;
      j["feature_dim"] = s.feature_dim;
    }
    auto& stages = j["stages"] = nlohmann::json::array();
    for (const auto& st : s.stages) {
      nlohmann::json js{{"out_channels", st.out_channels}, {"stride", st.stride},
                        {"max_depth", st.max_depth}};
      if (s.family == Family::ResNet) js["mid_channels"] = st.mid_channels;
      stages.push_back(js);
    }
    j["canonical"] = {{"kernel", s.canonical_kernel}, {"width", s.canonical_width},
                      {"depth", s.canonical_depth}};
  } else {
    j["layer_options"] = s.layer_options;
    j["head_options"] = s.head_options;
    j["intermediate_options"] = s.intermediate_options;
    j["embed_dim"] = s.embed_dim;
    j["head_dim"] = s.head_dim;
    j["patch_size"] = s.patch_size;
    j["canonical"] = {{"layers", s.canonical_layers}, {"heads", s.canonical_heads},
                      {"intermediate", s.canonical_intermediate}};
  }
}

void from_json(const nlohmann::json& j, ArchSpace& s) {
  s = ArchSpace{};
  s.family = family_from_string(j.at("family").get<std::string>());
  s.name = j.value("name", to_string(s.family));
  s.elem_bytes = j.value("elem_bytes", 1);
  s.batch = j.value("batch", 1);
  s.input_resolution = j.value("input_resolution", 224);
  s.num_classes = j.value("num_classes", 1000);
  const auto canonical = j.value("canonical", nlohmann::json::object());
  if (s.is_cnn()) {
    j.at("kernel_options").get_to(s.kernel_options);
    j.at("width_options").get_to(s.width_options);
    j.at("depth_options").get_to(s.depth_options);
    s.stem_channels = j.value("stem_channels", 16);
    s.head_channels = j.value("head_channels", 0);
    s.feature_dim = j.value("feature_dim", 0);
    for (const auto& js : j.at("stages")) {
      StageLayout st;
      st.out_channels = js.at("out_channels").get<int>();
      st.stride = js.value("stride", 1);
      st.max_depth = js.value("max_depth", s.depth_options.empty() ? 1 : s.depth_options.back());
      st.mid_channels = js.value("mid_channels", 0);
      s.stages.push_back(st);
    }
    s.canonical_kernel = canonical.value("kernel", 0);
    s.canonical_width = canonical.value("width", 0);
    s.canonical_depth = canonical.value("depth", 0);
  } else {
    j.at("layer_options").get_to(s.layer_options);
    j.at("head_options").get_to(s.head_options);
    j.at("intermediate_options").get_to(s.intermediate_options);
    s.embed_dim = j.value("embed_dim", 768);
    s.head_dim = j.value("head_dim", 64);
    s.patch_size = j.value("patch_size", 16);
    s.canonical_layers = canonical.value("layers", 0);
    s.canonical_heads = canonical.value("heads", 0);
    s.canonical_intermediate = canonical.value("intermediate", 0);
  }
  s.validate();
}

void to_json(nlohmann::json& j, const SubnetArch& a) {
  j = nlohmann::json{{"family", to_string(a.family)}};
  if (a.family == Family::ViT) {
    j["num_layers"] = a.num_layers;
    j["num_heads"] = a.num_heads;
    j["intermediate_dim"] = a.intermediate_dim;
  } else {
    j["depth"] = a.depth;
    j["kernel"] = a.kernel;
    j["width"] = a.width;
  }
}

void from_json(const nlohmann::json& j, SubnetArch& a) {
  a = SubnetArch{};
  a.family = family_from_string(j.at("family").get<std::string>());
  if (a.family == Family::ViT) {
    a.num_layers = j.at("num_layers").get<int>();
    a.num_heads = j.at("num_heads").get<int>();
    a.intermediate_dim = j.at("intermediate_dim").get<int>();
  } else {
    j.at("depth").get_to(a.depth);
    j.at("kernel").get_to(a.kernel);
    j.at("width").get_to(a.width);
  }
}

void LayerSpec::validate() const {
  if (groups < 1 || rows < 1 || reduction < 1 || out_channels < 1) {
    throw WorkloadError("layer '" + name + "': all dimensions must be >= 1");
  }
  if (elem_bytes != 1 && elem_bytes != 2 && elem_bytes != 4) {
    throw WorkloadError("layer '" + name + "': elem_bytes must be 1, 2 or 4");
  }
}

void to_json(nlohmann::json& j, const LayerSpec& l) {
  j = nlohmann::json{{"name", l.name},          {"G", l.groups},
                     {"I", l.rows},             {"Ic", l.reduction},
                     {"Oc", l.out_channels},    {"elem_bytes", l.elem_bytes}};
}

void from_json(const nlohmann::json& j, LayerSpec& l) {
  l.name = j.value("name", std::string("layer"));
  l.groups = j.value("G", std::int64_t{1});
  l.rows = j.at("I").get<std::int64_t>();
  l.reduction = j.at("Ic").get<std::int64_t>();
  l.out_channels = j.at("Oc").get<std::int64_t>();
  l.elem_bytes = j.value("elem_bytes", 1);
  l.validate();
}

std::vector<ElasticVariable> arch_variables(const ArchSpace& space) {
  std::vector<ElasticVariable> vars;
  if (space.is_cnn()) {
    const int nk = static_cast<int>(space.kernel_options.size());
    const int nw = static_cast<int>(space.width_options.size());
    const int nd = static_cast<int>(space.depth_options.size());
    for (std::size_t s = 0; s < space.stages.size(); ++s) {
      const int stage = static_cast<int>(s);
      const std::string prefix = "stage" + std::to_string(s);
      vars.push_back({prefix + ".depth", nd, -1, -1});
      for (int b = 0; b < space.stages[s].max_depth; ++b) {
        const std::string block = prefix + ".block" + std::to_string(b);
        vars.push_back({block + ".kernel", nk, stage, b});
        vars.push_back({block + ".width", nw, stage, b});
      }
    }
  } else {
    vars.push_back({"num_layers", static_cast<int>(space.layer_options.size()), -1, -1});
    vars.push_back({"num_heads", static_cast<int>(space.head_options.size()), -1, -1});
    vars.push_back({"intermediate_dim", static_cast<int>(space.intermediate_options.size()), -1, -1});
  }
  return vars;
}

std::vector<int> arch_to_indices(const ArchSpace& space, const SubnetArch& arch) {
  validate_subnet(space, arch);
  std::vector<int> out;
  if (!space.is_cnn()) {
    out.push_back(index_of(space.layer_options, arch.num_layers));
    out.push_back(index_of(space.head_options, arch.num_heads));
    out.push_back(index_of(space.intermediate_options, arch.intermediate_dim));
    return out;
  }
  std::size_t slot = 0;
  for (std::size_t s = 0; s < space.stages.size(); ++s) {
    out.push_back(index_of(space.depth_options, arch.depth[s]));
    for (int b = 0; b < space.stages[s].max_depth; ++b, ++slot) {
      const bool active = b < arch.depth[s];
      out.push_back(active ? index_of(space.kernel_options, arch.kernel[slot]) : -1);
      out.push_back(active ? index_of(space.width_options, arch.width[slot]) : -1);
    }
  }
  return out;
}

SubnetArch arch_from_indices(const ArchSpace& space, const std::vector<int>& idx) {
  SubnetArch a;
  a.family = space.family;
  const auto vars = arch_variables(space);
  if (idx.size() != vars.size()) throw WorkloadError("index vector length mismatch");
  auto pick = [&](std::size_t i, auto const& options) {
    if (idx[i] < 0 || idx[i] >= static_cast<int>(options.size())) {
      throw WorkloadError(vars[i].name + ": option index out of range");
    }
    return options[static_cast<std::size_t>(idx[i])];
  };
  if (!space.is_cnn()) {
    a.num_layers = pick(0, space.layer_options);
    a.num_heads = pick(1, space.head_options);
    a.intermediate_dim = pick(2, space.intermediate_options);
    return a;
  }
  std::size_t i = 0;
  for (const auto& stage : space.stages) {
    const int depth = pick(i++, space.depth_options);
    a.depth.push_back(depth);
    for (int b = 0; b < stage.max_depth; ++b) {
      if (b < depth) {
        a.kernel.push_back(pick(i, space.kernel_options));
        a.width.push_back(pick(i + 1, space.width_options));
      } else {
        if (idx[i] != -1 || idx[i + 1] != -1) {
          throw WorkloadError(vars[i].name + ": inactive block slot carries a choice");
        }
        a.kernel.push_back(space.kernel_options.front());
        a.width.push_back(space.width_options.front());
      }
      i += 2;
    }
  }
  return a;
}

void validate_subnet(const ArchSpace& space, const SubnetArch& a) {
  if (a.family != space.family) throw WorkloadError("subnet family does not match space");
  if (!space.is_cnn()) {
    if (index_of(space.layer_options, a.num_layers) < 0) throw WorkloadError("num_layers not in options");
    if (index_of(space.head_options, a.num_heads) < 0) throw WorkloadError("num_heads not in options");
    if (index_of(space.intermediate_options, a.intermediate_dim) < 0) {
      throw WorkloadError("intermediate_dim not in options");
    }
    return;
  }
  const auto slots = static_cast<std::size_t>(space.max_blocks());
  if (a.depth.size() != space.stages.size() || a.kernel.size() != slots || a.width.size() != slots) {
    throw WorkloadError("subnet choice vector has the wrong shape");
  }
  std::size_t slot = 0;
  for (std::size_t s = 0; s < space.stages.size(); ++s) {
    if (index_of(space.depth_options, a.depth[s]) < 0) throw WorkloadError("depth not in options");
    for (int b = 0; b < space.stages[s].max_depth; ++b, ++slot) {
      if (index_of(space.kernel_options, a.kernel[slot]) < 0) throw WorkloadError("kernel not in options");
      if (index_of(space.width_options, a.width[slot]) < 0) throw WorkloadError("width not in options");
      if (b >= a.depth[s] &&
          (a.kernel[slot] != space.kernel_options.front() || a.width[slot] != space.width_options.front())) {
        throw WorkloadError("inactive block slot must hold the first option");
      }
    }
  }
}

namespace {

SubnetArch uniform_choice(const ArchSpace& space, int kernel, int width, int depth, int layers,
                          int heads, int inter) {
  const auto vars = arch_variables(space);
  std::vector<int> idx(vars.size(), -1);
  if (!space.is_cnn()) {
    idx = {layers, heads, inter};
    return arch_from_indices(space, idx);
  }
  std::size_t i = 0;
  for (const auto& stage : space.stages) {
    idx[i++] = depth;
    const int d = space.depth_options[static_cast<std::size_t>(depth)];
    for (int b = 0; b < stage.max_depth; ++b, i += 2) {
      if (b < d) {
        idx[i] = kernel;
        idx[i + 1] = width;
      }
    }
  }
  return arch_from_indices(space, idx);
}

int last(const auto& v) { return static_cast<int>(v.size()) - 1; }

}  // namespace

SubnetArch canonical_subnet(const ArchSpace& s) {
  return uniform_choice(s, s.canonical_kernel, s.canonical_width, s.canonical_depth,
                        s.canonical_layers, s.canonical_heads, s.canonical_intermediate);
}

SubnetArch minimal_subnet(const ArchSpace& s) { return uniform_choice(s, 0, 0, 0, 0, 0, 0); }

SubnetArch maximal_subnet(const ArchSpace& s) {
  return uniform_choice(s, last(s.kernel_options), last(s.width_options), last(s.depth_options),
                        last(s.layer_options), last(s.head_options), last(s.intermediate_options));
}

SubnetArch sample_subnet(const ArchSpace& space, Rng& rng) {
  const auto vars = arch_variables(space);
  std::vector<int> idx(vars.size(), -1);
  // Draw every variable, including block slots that end up inactive, so the
  // stream consumption does not depend on the depth choices.
  std::vector<int> depth_of_stage;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    idx[i] = uniform_index(rng, vars[i].num_options);
    if (vars[i].gating_stage < 0 && space.is_cnn()) {
      depth_of_stage.push_back(space.depth_options[static_cast<std::size_t>(idx[i])]);
    }
  }
  if (space.is_cnn()) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto& v = vars[i];
      if (v.gating_stage >= 0 && v.block >= depth_of_stage[static_cast<std::size_t>(v.gating_stage)]) {
        idx[i] = -1;
      }
    }
  }
  return arch_from_indices(space, idx);
}

SubnetArch sample_subnet(const ArchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return sample_subnet(space, rng);
}

LayerSpec lower_conv(std::string name, int batch, int height, int width, int in_channels,
                     int out_channels, int kernel, int stride, int groups, int elem_bytes) {
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw WorkloadError("layer '" + name + "': channels not divisible by groups");
  }
  if (stride < 1 || kernel < 1 || height < 1 || width < 1 || batch < 1) {
    throw WorkloadError("layer '" + name + "': bad convolution geometry");
  }
  LayerSpec l;
  l.name = std::move(name);
  l.groups = groups;
  l.rows = static_cast<std::int64_t>(batch) * ceil_div(height, stride) * ceil_div(width, stride);
  l.reduction = static_cast<std::int64_t>(in_channels / groups) * kernel * kernel;
  l.out_channels = out_channels / groups;
  l.elem_bytes = elem_bytes;
  l.validate();
  return l;
}

namespace {

LayerSpec linear(std::string name, std::int64_t rows, std::int64_t in, std::int64_t out, int b,
                 std::int64_t groups = 1) {
  LayerSpec l{std::move(name), groups, rows, in, out, b};
  l.validate();
  return l;
}

void lower_mbv3(const ArchSpace& s, const SubnetArch& a, std::vector<LayerSpec>& out) {
  const int b = s.elem_bytes;
  const int n = s.batch;
  int res = s.input_resolution;
  out.push_back(lower_conv("stem", n, res, res, 3, s.stem_channels, 3, 2, 1, b));
  res = (res + 1) / 2;
  int ch = s.stem_channels;
  out.push_back(lower_conv("first.dw", n, res, res, ch, ch, 3, 1, ch, b));
  out.push_back(lower_conv("first.pw", n, res, res, ch, ch, 1, 1, 1, b));
  std::size_t slot = 0;
  for (std::size_t si = 0; si < s.stages.size(); ++si) {
    const auto& stage = s.stages[si];
    for (int blk = 0; blk < stage.max_depth; ++blk, ++slot) {
      if (blk >= a.depth[si]) continue;
      const std::string tag = "s" + std::to_string(si) + ".b" + std::to_string(blk);
      const int stride = blk == 0 ? stage.stride : 1;
      const int mid = static_cast<int>(std::lround(ch * a.width[slot]));
      const int k = a.kernel[slot];
      out.push_back(lower_conv(tag + ".expand", n, res, res, ch, mid, 1, 1, 1, b));
      out.push_back(lower_conv(tag + ".dw", n, res, res, mid, mid, k, stride, mid, b));
      res = (res + stride - 1) / stride;
      out.push_back(lower_conv(tag + ".project", n, res, res, mid, stage.out_channels, 1, 1, 1, b));
      ch = stage.out_channels;
    }
  }
  out.push_back(lower_conv("head.expand", n, res, res, ch, s.head_channels, 1, 1, 1, b));
  out.push_back(linear("head.feature", n, s.head_channels, s.feature_dim, b));
  out.push_back(linear("classifier", n, s.feature_dim, s.num_classes, b));
}

void lower_resnet(const ArchSpace& s, const SubnetArch& a, std::vector<LayerSpec>& out) {
  const int b = s.elem_bytes;
  const int n = s.batch;
  int res = s.input_resolution;
  out.push_back(lower_conv("stem", n, res, res, 3, s.stem_channels, 7, 2, 1, b));
  res = (res + 1) / 2;
  res = (res + 1) / 2;  // max-pool, no MACs
  int ch = s.stem_channels;
  std::size_t slot = 0;
  for (std::size_t si = 0; si < s.stages.size(); ++si) {
    const auto& stage = s.stages[si];
    for (int blk = 0; blk < stage.max_depth; ++blk, ++slot) {
      if (blk >= a.depth[si]) continue;
      const std::string tag = "s" + std::to_string(si) + ".b" + std::to_string(blk);
      const int stride = blk == 0 ? stage.stride : 1;
      const int mid = make_divisible(stage.mid_channels * a.width[slot], 8);
      const int k = a.kernel[slot];
      const int out_res = (res + stride - 1) / stride;
      out.push_back(lower_conv(tag + ".conv1", n, res, res, ch, mid, 1, 1, 1, b));
      out.push_back(lower_conv(tag + ".conv2", n, res, res, mid, mid, k, stride, 1, b));
      out.push_back(lower_conv(tag + ".conv3", n, out_res, out_res, mid, stage.out_channels, 1, 1, 1, b));
      if (blk == 0) {
        out.push_back(lower_conv(tag + ".downsample", n, res, res, ch, stage.out_channels, 1, stride, 1, b));
      }
      res = out_res;
      ch = stage.out_channels;
    }
  }
  out.push_back(linear("classifier", n, ch, s.num_classes, b));
}

void lower_vit(const ArchSpace& s, const SubnetArch& a, std::vector<LayerSpec>& out) {
  const int b = s.elem_bytes;
  const int n = s.batch;
  const int grid = s.input_resolution / s.patch_size;
  out.push_back(lower_conv("patch_embed", n, s.input_resolution, s.input_resolution, 3, s.embed_dim,
                           s.patch_size, s.patch_size, 1, b));
  const std::int64_t tokens = static_cast<std::int64_t>(n) * (grid * grid + 1);
  const std::int64_t seq = grid * grid + 1;
  const std::int64_t attn_dim = static_cast<std::int64_t>(a.num_heads) * s.head_dim;
  for (int l = 0; l < a.num_layers; ++l) {
    const std::string tag = "layer" + std::to_string(l);
    out.push_back(linear(tag + ".qkv", tokens, s.embed_dim, 3 * attn_dim, b));
    out.push_back(linear(tag + ".scores", tokens, s.head_dim, seq, b, a.num_heads));
    out.push_back(linear(tag + ".context", tokens, seq, s.head_dim, b, a.num_heads));
    out.push_back(linear(tag + ".proj", tokens, attn_dim, s.embed_dim, b));
    out.push_back(linear(tag + ".fc1", tokens, s.embed_dim, a.intermediate_dim, b));
    out.push_back(linear(tag + ".fc2", tokens, a.intermediate_dim, s.embed_dim, b));
  }
  out.push_back(linear("classifier", n, s.embed_dim, s.num_classes, b));
}

}  // namespace

std::vector<LayerSpec> lower_to_layers(const ArchSpace& space, const SubnetArch& arch) {
  validate_subnet(space, arch);
  std::vector<LayerSpec> layers;
  switch (space.family) {
    case Family::MobileNetV3: lower_mbv3(space, arch, layers); break;
    case Family::ResNet: lower_resnet(space, arch, layers); break;
    case Family::ViT: lower_vit(space, arch, layers); break;
  }
  return layers;
}

std::int64_t count_macs(const std::vector<LayerSpec>& layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.macs();
  return total;
}

std::int64_t count_macs(const ArchSpace& space, const SubnetArch& arch) {
  return count_macs(lower_to_layers(space, arch));
}

std::int64_t count_params(const std::vector<LayerSpec>& layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.weight_elems();
  return total;
}

std::int64_t count_params(const ArchSpace& space, const SubnetArch& arch) {
  return count_params(lower_to_layers(space, arch));
}

}  // namespace cimnet
