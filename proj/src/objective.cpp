#include "scancad/objective.hpp"

#include <cmath>

#include "scancad/error.hpp"

namespace scancad {

ObjectiveWeights ObjectiveWeights::preset(const std::string& name) {
  if (name == "scannet") return scannet();
  if (name == "arkitscenes") return arkitscenes();
  throw Error(ErrorCode::kInvalidArgument, "unknown weight preset '" + name + "'");
}

void ObjectiveWeights::validate() const {
  const bool nonneg = lambda_m >= 0.0 && lambda_s >= 0.0 && lambda_sil >= 0.0 && lambda_cd >= 0.0;
  const bool any = lambda_m > 0.0 || lambda_s > 0.0 || lambda_sil > 0.0 || lambda_cd > 0.0;
  if (!nonneg || !any) throw Error(ErrorCode::kInvalidArgument, "objective weights must be >= 0, not all zero");
}

namespace {

DepthMap point_sample(const DepthMap& src, int factor, int width, int height) {
  if (factor <= 1) return src;
  DepthMap out(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      out.at(u, v) = src.at(std::min(src.width - 1, factor * u + factor / 2), std::min(src.height - 1, factor * v + factor / 2));
    }
  }
  return out;
}

// One reference term of the depth loss for a frame: (1/V) * sum |D_cad - D_ref|.
double depth_term(const DepthMap& cad, const DepthMap& ref, const ObjectiveOptions& options) {
  double sum = 0.0;
  std::size_t valid = 0;
  const bool penalize = options.mask_semantics == MaskSemantics::kPenalize;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    const double r = ref.values[i];
    if (!DepthMap::is_valid(r)) continue;
    const double c = cad.values[i];
    if (DepthMap::is_valid(c)) {
      sum += std::abs(c - r);
      ++valid;
    } else if (penalize) {
      sum += options.uncovered_penalty;
      ++valid;
    }
  }
  return valid == 0 ? 0.0 : sum / static_cast<double>(valid);
}

}  // namespace

FrameCache build_frame_cache(const RgbdScan& scan, const ObjectAnnotation& ann, const FrameSelection& selection,
                             int render_downsample) {
  if (selection.frame_indices.empty()) throw Error(ErrorCode::kEmptySelection, "no frames selected");
  if (!ann.segmentation) {
    throw Error(ErrorCode::kInvalidArgument, "object " + std::to_string(ann.object_id) + " has no segmentation");
  }
  FrameCache cache;
  cache.object_id = ann.object_id;
  cache.object_cloud = object_point_cloud(scan, ann);
  cache.hole_mesh = remove_object(scan, ann);
  const ObjectSplit split = split_object_faces(scan.scene_mesh, *ann.segmentation);

  const PosedMesh hole[] = {PosedMesh(cache.hole_mesh)};
  const PosedMesh object[] = {PosedMesh(split.object)};
  const PosedMesh rest[] = {PosedMesh(split.rest)};
  cache.frames.resize(selection.frame_indices.size());
  for (std::size_t t = 0; t < selection.frame_indices.size(); ++t) {
    const std::size_t idx = selection.frame_indices[t];
    if (idx >= scan.frames.size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
    FrameData& fd = cache.frames[t];
    fd.scan_frame = idx;
    fd.camera = scan.frames[idx].camera.downsampled(render_downsample);
    const int w = fd.camera.intrinsics.width;
    const int h = fd.camera.intrinsics.height;
    fd.sensor = point_sample(scan.frames[idx].depth, render_downsample, w, h);
    fd.hole = render_depth(hole, fd.camera);
    const DepthMap object_depth = render_depth(object, fd.camera);
    const DepthMap rest_depth = render_depth(rest, fd.camera);
    fd.scene = fuse_depth(object_depth, rest_depth);
    fd.object_mask = visible_mask(object_depth, rest_depth);
  }
  return cache;
}

double eval_l_dpt(const FrameCache& cache, std::span<const DepthMap> candidate_depths, const ObjectiveWeights& w,
                  const ObjectiveOptions& options) {
  if (cache.frames.empty()) throw Error(ErrorCode::kEmptySelection, "frame cache is empty");
  if (candidate_depths.size() != cache.frames.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one candidate depth map per cached frame expected");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < cache.frames.size(); ++t) {
    const FrameData& fd = cache.frames[t];
    const DepthMap& cad = candidate_depths[t];
    if (cad.values.size() != fd.scene.values.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "candidate depth size differs from the cached frame");
    }
    sum += w.lambda_m * depth_term(cad, fd.scene, options) + w.lambda_s * depth_term(cad, fd.sensor, options);
  }
  return sum / static_cast<double>(cache.frames.size());
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.values.size() != b.values.size()) throw Error(ErrorCode::kDimensionMismatch, "mask sizes differ");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool x = a.values[i] != 0;
    const bool y = b.values[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double eval_l_sil(const FrameCache& cache, std::span<const Mask> candidate_masks) {
  if (cache.frames.empty()) throw Error(ErrorCode::kEmptySelection, "frame cache is empty");
  if (candidate_masks.size() != cache.frames.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one candidate mask per cached frame expected");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < cache.frames.size(); ++t) {
    sum += 1.0 - mask_iou(cache.frames[t].object_mask, candidate_masks[t]);
  }
  return sum / static_cast<double>(cache.frames.size());
}

double eval_l_cd(const PointCloud& object_cloud, const PointCloud& cad_cloud_world) {
  return chamfer_one_way(object_cloud, cad_cloud_world);
}

ObjectiveBreakdown combine(double l_dpt, double l_sil, double l_cd, const ObjectiveWeights& w) {
  return {l_dpt, l_sil, l_cd, l_dpt + w.lambda_sil * l_sil + w.lambda_cd * l_cd};
}

CandidateEvaluator::CandidateEvaluator(const FrameCache& cache, const CadModel& model,
                                       std::shared_ptr<const PointCloud> canonical_samples,
                                       const ObjectiveWeights& weights, const ObjectiveOptions& options)
    : cache_(&cache),
      model_(&model),
      samples_(std::move(canonical_samples)),
      chamfer_(*samples_),
      weights_(weights),
      options_(options) {
  if (cache.frames.empty()) throw Error(ErrorCode::kEmptySelection, "frame cache is empty");
}

void CandidateEvaluator::render_candidate(const Pose9& pose, std::vector<DepthMap>& depths,
                                          std::vector<Mask>& masks) const {
  const PosedMesh cad[] = {PosedMesh(model_->mesh, pose)};
  depths.resize(cache_->frames.size());
  masks.resize(cache_->frames.size());
  for (std::size_t t = 0; t < cache_->frames.size(); ++t) {
    const FrameData& fd = cache_->frames[t];
    const DepthMap cad_depth = render_depth(cad, fd.camera);
    depths[t] = fuse_depth(fd.hole, cad_depth);
    masks[t] = options_.visible_silhouettes ? visible_mask(cad_depth, fd.hole)
                                            : visible_mask(cad_depth, DepthMap(cad_depth.width, cad_depth.height));
  }
}

// Single pass per frame over the candidate render: the fused depth, the
// visible silhouette and both depth terms are accumulated without building
// the intermediate images. Sums run in pixel order, so the result matches
// render_candidate + eval_l_dpt + eval_l_sil bit for bit.
ObjectiveBreakdown CandidateEvaluator::operator()(const Pose9& pose) const {
  const PosedMesh cad[] = {PosedMesh(model_->mesh, pose)};
  const bool penalize = options_.mask_semantics == MaskSemantics::kPenalize;
  double dpt = 0.0;
  double sil = 0.0;
  for (const FrameData& fd : cache_->frames) {
    const DepthMap cad_depth = render_depth(cad, fd.camera);
    double sum_m = 0.0, sum_s = 0.0;
    std::size_t n_m = 0, n_s = 0, inter = 0, uni = 0;
    for (std::size_t i = 0; i < cad_depth.values.size(); ++i) {
      const double c = cad_depth.values[i];
      const double h = fd.hole.values[i];
      const bool cv = DepthMap::is_valid(c);
      const bool hv = DepthMap::is_valid(h);
      const double fused = cv && hv ? std::min(c, h) : cv ? c : hv ? h : 0.0;
      const bool fused_valid = DepthMap::is_valid(fused);
      const double m = fd.scene.values[i];
      if (DepthMap::is_valid(m)) {
        if (fused_valid) {
          sum_m += std::abs(fused - m);
          ++n_m;
        } else if (penalize) {
          sum_m += options_.uncovered_penalty;
          ++n_m;
        }
      }
      const double s = fd.sensor.values[i];
      if (DepthMap::is_valid(s)) {
        if (fused_valid) {
          sum_s += std::abs(fused - s);
          ++n_s;
        } else if (penalize) {
          sum_s += options_.uncovered_penalty;
          ++n_s;
        }
      }
      const bool in_cad = cv && (!options_.visible_silhouettes || !hv || c <= h);
      const bool in_obj = fd.object_mask.values[i] != 0;
      inter += (in_cad && in_obj) ? 1 : 0;
      uni += (in_cad || in_obj) ? 1 : 0;
    }
    const double term_m = n_m == 0 ? 0.0 : sum_m / static_cast<double>(n_m);
    const double term_s = n_s == 0 ? 0.0 : sum_s / static_cast<double>(n_s);
    dpt += weights_.lambda_m * term_m + weights_.lambda_s * term_s;
    sil += 1.0 - (uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni));
  }
  const double n = static_cast<double>(cache_->frames.size());
  const double l_cd = chamfer_.from_world(cache_->object_cloud, pose);
  return combine(dpt / n, sil / n, l_cd, weights_);
}

ObjectiveBreakdown eval_objective(const FrameCache& cache, const CadModel& model,
                                  std::shared_ptr<const PointCloud> canonical_samples, const Pose9& pose,
                                  const ObjectiveWeights& w, const ObjectiveOptions& options) {
  return CandidateEvaluator(cache, model, std::move(canonical_samples), w, options)(pose);
}

namespace reference {

double eval_l_dpt_naive(const FrameCache& cache, std::span<const DepthMap> candidate_depths,
                        const ObjectiveWeights& w) {
  const auto valid = [](double z) { return std::isfinite(z) && z > 0.0; };
  double total = 0.0;
  for (std::size_t t = 0; t < cache.frames.size(); ++t) {
    const auto& f = cache.frames[t];
    const auto& d = candidate_depths[t];
    double sum_m = 0.0, sum_s = 0.0;
    int v_m = 0, v_s = 0;
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        const double c = d.at(x, y);
        if (!valid(c)) continue;
        if (valid(f.scene.at(x, y))) {
          sum_m += std::abs(c - f.scene.at(x, y));
          ++v_m;
        }
        if (valid(f.sensor.at(x, y))) {
          sum_s += std::abs(c - f.sensor.at(x, y));
          ++v_s;
        }
      }
    }
    if (v_m > 0) total += w.lambda_m / v_m * sum_m;
    if (v_s > 0) total += w.lambda_s / v_s * sum_s;
  }
  return total / static_cast<double>(cache.frames.size());
}

}  // namespace reference

}  // namespace scancad
