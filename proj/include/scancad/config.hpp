#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "scancad/json_util.hpp"
#include "scancad/objective.hpp"
#include "scancad/scene.hpp"

namespace scancad {

enum class RotationMode { kFull, kYaw };

struct RefinementConfig {
  int steps = 200;
  double lr_translation = 0.01;  // m / step
  double lr_rotation = 0.02;     // rad / step
  double lr_log_scale = 0.01;    // log-scale / step
  double eps_translation = 0.002;
  double eps_rotation = 0.005;
  double eps_log_scale = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  // Learning rates decay geometrically to this fraction by the last step.
  double final_lr_fraction = 0.1;
  RotationMode rotation_mode = RotationMode::kFull;

  void validate() const;
};

enum class ClusterNormalization { kUnitDiagonal, kRaw };
enum class ClonePool { kCategory, kTopK };

struct PipelineConfig {
  std::string preset = "scannet";  // "scannet", "arkitscenes" or "custom"
  ObjectiveWeights weights = ObjectiveWeights::scannet();
  ObjectiveOptions objective;
  std::size_t n_t = 20;
  FrameSpacing frame_spacing = FrameSpacing::kEven;
  double segmentation_margin = 0.02;
  std::size_t n_samples = 10000;
  std::uint64_t sample_seed = 0;
  std::size_t top_k = 3;
  double tau = 3e-3;
  ClusterNormalization cluster_normalization = ClusterNormalization::kUnitDiagonal;
  ClonePool clone_pool = ClonePool::kCategory;
  bool cloning = true;
  RefinementConfig refinement;
  int render_downsample = 1;
  std::map<std::string, std::string> class_map;
  std::optional<std::filesystem::path> cache_dir;

  void validate() const;
};

// Unknown keys are rejected so that typos do not silently fall back to
// defaults. Weights given explicitly override the preset.
PipelineConfig config_from_json(const json& j);
json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

// Replaces weights with a named preset ("custom" keeps the current ones).
void apply_preset(PipelineConfig& config, const std::string& preset);

}  // namespace scancad
