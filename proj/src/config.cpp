#include "scancad/config.hpp"

#include <set>

#include "scancad/error.hpp"
#include "scancad/io.hpp"

namespace scancad {

void RefinementConfig::validate() const {
  const bool ok = steps >= 1 && lr_translation > 0 && lr_rotation > 0 && lr_log_scale > 0 && eps_translation > 0 &&
                  eps_rotation > 0 && eps_log_scale > 0 && beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 &&
                  final_lr_fraction > 0 && final_lr_fraction <= 1;
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "refinement settings must be positive (betas and lr fraction in (0,1])");
}

void PipelineConfig::validate() const {
  weights.validate();
  refinement.validate();
  if (n_t < 1 || n_samples < 1 || top_k < 1 || !(tau >= 0.0) || segmentation_margin < 0.0 || render_downsample < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid pipeline configuration");
  }
}

void apply_preset(PipelineConfig& config, const std::string& preset) {
  if (preset != "custom") config.weights = ObjectiveWeights::preset(preset);
  config.preset = preset;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::kManifestInvalid, what + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& what) {
  if (j.contains(key)) out = require_field<T>(j, key, what);
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  const std::string what = "config";
  if (!j.is_object()) throw Error(ErrorCode::kManifestInvalid, "config must be a JSON object");
  reject_unknown(j,
                 {"preset", "weights", "n_t", "frame_spacing", "segmentation_margin", "n_samples", "sample_seed",
                  "top_k", "tau", "cluster_normalization", "clone_pool", "cloning", "refinement", "mask_semantics",
                  "uncovered_penalty", "visible_silhouettes", "render_downsample", "class_map", "cache_dir"},
                 what);
  PipelineConfig c;
  if (j.contains("preset")) {
    try {
      apply_preset(c, require_field<std::string>(j, "preset", what));
    } catch (const Error& e) {
      throw Error(ErrorCode::kManifestInvalid, std::string("config: ") + e.what());
    }
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    reject_unknown(w, {"lambda_m", "lambda_s", "lambda_sil", "lambda_cd"}, "config.weights");
    read_opt(w, "lambda_m", c.weights.lambda_m, "config.weights");
    read_opt(w, "lambda_s", c.weights.lambda_s, "config.weights");
    read_opt(w, "lambda_sil", c.weights.lambda_sil, "config.weights");
    read_opt(w, "lambda_cd", c.weights.lambda_cd, "config.weights");
    if (!j.contains("preset")) c.preset = "custom";
  }
  read_opt(j, "n_t", c.n_t, what);
  if (j.contains("frame_spacing")) {
    const auto s = require_field<std::string>(j, "frame_spacing", what);
    if (s == "even") c.frame_spacing = FrameSpacing::kEven;
    else if (s == "stride") c.frame_spacing = FrameSpacing::kStride;
    else throw Error(ErrorCode::kManifestInvalid, "config: frame_spacing must be even|stride");
  }
  read_opt(j, "segmentation_margin", c.segmentation_margin, what);
  read_opt(j, "n_samples", c.n_samples, what);
  read_opt(j, "sample_seed", c.sample_seed, what);
  read_opt(j, "top_k", c.top_k, what);
  read_opt(j, "tau", c.tau, what);
  if (j.contains("cluster_normalization")) {
    const auto s = require_field<std::string>(j, "cluster_normalization", what);
    if (s == "unit_diagonal") c.cluster_normalization = ClusterNormalization::kUnitDiagonal;
    else if (s == "raw") c.cluster_normalization = ClusterNormalization::kRaw;
    else throw Error(ErrorCode::kManifestInvalid, "config: cluster_normalization must be unit_diagonal|raw");
  }
  if (j.contains("clone_pool")) {
    const auto s = require_field<std::string>(j, "clone_pool", what);
    if (s == "category") c.clone_pool = ClonePool::kCategory;
    else if (s == "top_k") c.clone_pool = ClonePool::kTopK;
    else throw Error(ErrorCode::kManifestInvalid, "config: clone_pool must be category|top_k");
  }
  read_opt(j, "cloning", c.cloning, what);
  if (j.contains("mask_semantics")) {
    const auto s = require_field<std::string>(j, "mask_semantics", what);
    if (s == "intersect") c.objective.mask_semantics = MaskSemantics::kIntersect;
    else if (s == "penalize") c.objective.mask_semantics = MaskSemantics::kPenalize;
    else throw Error(ErrorCode::kManifestInvalid, "config: mask_semantics must be intersect|penalize");
  }
  read_opt(j, "uncovered_penalty", c.objective.uncovered_penalty, what);
  read_opt(j, "visible_silhouettes", c.objective.visible_silhouettes, what);
  read_opt(j, "render_downsample", c.render_downsample, what);
  if (j.contains("class_map")) c.class_map = require_field<std::map<std::string, std::string>>(j, "class_map", what);
  if (j.contains("cache_dir")) c.cache_dir = require_field<std::string>(j, "cache_dir", what);
  if (j.contains("refinement")) {
    const json& r = j.at("refinement");
    const std::string rw = "config.refinement";
    reject_unknown(r,
                   {"steps", "lr_translation", "lr_rotation", "lr_log_scale", "eps_translation", "eps_rotation",
                    "eps_log_scale", "beta1", "beta2", "final_lr_fraction", "rotation_mode"},
                   rw);
    auto& rc = c.refinement;
    read_opt(r, "steps", rc.steps, rw);
    read_opt(r, "lr_translation", rc.lr_translation, rw);
    read_opt(r, "lr_rotation", rc.lr_rotation, rw);
    read_opt(r, "lr_log_scale", rc.lr_log_scale, rw);
    read_opt(r, "eps_translation", rc.eps_translation, rw);
    read_opt(r, "eps_rotation", rc.eps_rotation, rw);
    read_opt(r, "eps_log_scale", rc.eps_log_scale, rw);
    read_opt(r, "beta1", rc.beta1, rw);
    read_opt(r, "beta2", rc.beta2, rw);
    read_opt(r, "final_lr_fraction", rc.final_lr_fraction, rw);
    if (r.contains("rotation_mode")) {
      const auto s = require_field<std::string>(r, "rotation_mode", rw);
      if (s == "full") rc.rotation_mode = RotationMode::kFull;
      else if (s == "yaw") rc.rotation_mode = RotationMode::kYaw;
      else throw Error(ErrorCode::kManifestInvalid, "config.refinement: rotation_mode must be full|yaw");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kManifestInvalid, std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const PipelineConfig& c) {
  const auto& r = c.refinement;
  json j{
      {"preset", c.preset},
      {"weights",
       {{"lambda_m", c.weights.lambda_m},
        {"lambda_s", c.weights.lambda_s},
        {"lambda_sil", c.weights.lambda_sil},
        {"lambda_cd", c.weights.lambda_cd}}},
      {"n_t", c.n_t},
      {"frame_spacing", c.frame_spacing == FrameSpacing::kEven ? "even" : "stride"},
      {"segmentation_margin", c.segmentation_margin},
      {"n_samples", c.n_samples},
      {"sample_seed", c.sample_seed},
      {"top_k", c.top_k},
      {"tau", c.tau},
      {"cluster_normalization", c.cluster_normalization == ClusterNormalization::kUnitDiagonal ? "unit_diagonal" : "raw"},
      {"clone_pool", c.clone_pool == ClonePool::kCategory ? "category" : "top_k"},
      {"cloning", c.cloning},
      {"mask_semantics", c.objective.mask_semantics == MaskSemantics::kIntersect ? "intersect" : "penalize"},
      {"uncovered_penalty", c.objective.uncovered_penalty},
      {"visible_silhouettes", c.objective.visible_silhouettes},
      {"render_downsample", c.render_downsample},
      {"class_map", c.class_map},
      {"refinement",
       {{"steps", r.steps},
        {"lr_translation", r.lr_translation},
        {"lr_rotation", r.lr_rotation},
        {"lr_log_scale", r.lr_log_scale},
        {"eps_translation", r.eps_translation},
        {"eps_rotation", r.eps_rotation},
        {"eps_log_scale", r.eps_log_scale},
        {"beta1", r.beta1},
        {"beta2", r.beta2},
        {"final_lr_fraction", r.final_lr_fraction},
        {"rotation_mode", r.rotation_mode == RotationMode::kFull ? "full" : "yaw"}}},
  };
  if (c.cache_dir) j["cache_dir"] = c.cache_dir->string();
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kManifestInvalid, "config " + path.string() + " not found");
  return config_from_json(parse_json(read_text_file(path), path.string()));
}

}  // namespace scancad
