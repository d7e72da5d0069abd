#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scancad/cad_db.hpp"
#include "scancad/chamfer.hpp"
#include "scancad/raster.hpp"
#include "scancad/scene.hpp"

namespace scancad {

struct ObjectiveWeights {
  double lambda_m = 0.75;    // depth vs. rendered scene mesh
  double lambda_s = 0.9;     // depth vs. sensor depth
  double lambda_sil = 0.3;   // silhouette IoU term
  double lambda_cd = 2.0;    // one-way Chamfer term

  static ObjectiveWeights scannet() { return {0.75, 0.9, 0.3, 2.0}; }
  static ObjectiveWeights arkitscenes() { return {0.3, 1.3, 0.4, 1.5}; }
  // Throws kInvalidArgument for "custom" or unknown names.
  static ObjectiveWeights preset(const std::string& name);

  // All weights >= 0 and at least one > 0.
  void validate() const;
};

enum class MaskSemantics {
  kIntersect,  // compare only where the reference and the candidate are both valid
  kPenalize,   // reference-valid pixels the candidate leaves uncovered cost a constant
};

struct ObjectiveOptions {
  MaskSemantics mask_semantics = MaskSemantics::kIntersect;
  double uncovered_penalty = 1.0;  // meters, only for kPenalize
  bool visible_silhouettes = true;  // false: free projection of the candidate
};

struct FrameData {
  std::size_t scan_frame = 0;
  Camera camera;
  DepthMap sensor;  // D_sns
  DepthMap hole;    // scene with the object removed
  DepthMap scene;   // D_msh, the full scene mesh
  Mask object_mask; // S_msh, visible silhouette of the object in the full scene
};

// Everything that does not depend on the candidate, computed once per object.
struct FrameCache {
  int object_id = 0;
  std::vector<FrameData> frames;
  PointCloud object_cloud;  // P, the segmented scene vertices
  TriMesh hole_mesh;        // kept for composing overlays

  std::size_t n_t() const { return frames.size(); }
};

struct ObjectiveBreakdown {
  double l_dpt = 0.0;
  double l_sil = 0.0;
  double l_cd = 0.0;
  double total = 0.0;
};

// `ann` must carry a segmentation (see derive_missing_supervision).
// `render_downsample` > 1 renders at reduced resolution; the sensor depth is
// point-sampled at the corresponding pixel centres.
FrameCache build_frame_cache(const RgbdScan& scan, const ObjectAnnotation& ann, const FrameSelection& selection,
                             int render_downsample = 1);

// `candidate_depths[t]` is D_cad for frame t (hole scene fused with the CAD).
double eval_l_dpt(const FrameCache& cache, std::span<const DepthMap> candidate_depths, const ObjectiveWeights& w,
                  const ObjectiveOptions& options = {});
double eval_l_sil(const FrameCache& cache, std::span<const Mask> candidate_masks);
double eval_l_cd(const PointCloud& object_cloud, const PointCloud& cad_cloud_world);

ObjectiveBreakdown combine(double l_dpt, double l_sil, double l_cd, const ObjectiveWeights& w);

// Scores poses of one CAD model against one cached object. Holds a Chamfer
// index over the canonical samples; safe to call concurrently.
class CandidateEvaluator {
 public:
  CandidateEvaluator(const FrameCache& cache, const CadModel& model,
                     std::shared_ptr<const PointCloud> canonical_samples, const ObjectiveWeights& weights,
                     const ObjectiveOptions& options = {});

  ObjectiveBreakdown operator()(const Pose9& pose) const;

  // Per-frame D_cad and S_cad for a pose.
  void render_candidate(const Pose9& pose, std::vector<DepthMap>& depths, std::vector<Mask>& masks) const;

  const CadModel& model() const { return *model_; }
  const FrameCache& cache() const { return *cache_; }
  const ObjectiveWeights& weights() const { return weights_; }

 private:
  const FrameCache* cache_;
  const CadModel* model_;
  std::shared_ptr<const PointCloud> samples_;
  PosedChamfer chamfer_;
  ObjectiveWeights weights_;
  ObjectiveOptions options_;
};

ObjectiveBreakdown eval_objective(const FrameCache& cache, const CadModel& model,
                                  std::shared_ptr<const PointCloud> canonical_samples, const Pose9& pose,
                                  const ObjectiveWeights& w, const ObjectiveOptions& options = {});

double mask_iou(const Mask& a, const Mask& b);

namespace reference {

// Straight per-pixel loops over the formula; oracle for eval_l_dpt.
double eval_l_dpt_naive(const FrameCache& cache, std::span<const DepthMap> candidate_depths,
                        const ObjectiveWeights& w);

}  // namespace reference

}  // namespace scancad
