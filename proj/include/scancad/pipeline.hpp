#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scancad/cad_db.hpp"
#include "scancad/config.hpp"
#include "scancad/objective.hpp"
#include "scancad/scene.hpp"

namespace scancad {

struct RankedCandidate {
  std::string model_id;
  Pose9 pose;  // initial pose from the object's box
  ObjectiveBreakdown breakdown;
};

// Per-object state shared by retrieval, cloning and refinement.
struct ObjectTask {
  ObjectAnnotation annotation;  // with obb and segmentation resolved
  std::string category;
  FrameSelection selection;
  FrameCache cache;
  std::vector<RankedCandidate> top_k;
};

// Resolves supervision, selects frames and builds the frame cache.
ObjectTask prepare_object(const RgbdScan& scan, const ObjectAnnotation& ann, const CadDatabase& db,
                          const PipelineConfig& config);

// Category candidates for a class label after the config's class map.
const std::vector<std::string>& resolve_candidates(const CadDatabase& db, const PipelineConfig& config,
                                                   const std::string& class_label);

// Scores every candidate at its box-initialized pose and keeps the k lowest
// totals (ties: lexicographic id). Candidates are evaluated in parallel; the
// result does not depend on thread count or evaluation order.
std::vector<RankedCandidate> retrieve_top_k(const FrameCache& cache, const Obb& obb,
                                            std::span<const std::string> candidates, const CadDatabase& db,
                                            const PipelineConfig& config, std::size_t k);

// ---- cloning --------------------------------------------------------------

struct Cluster {
  int cluster_id = 0;
  std::vector<int> members;  // object ids, ascending
  std::string model_id;      // filled by joint retrieval
};

struct PairDistance {
  int a = 0;
  int b = 0;
  double distance = 0.0;
};

// Bottom-up clustering over object pairs in ascending distance (ties by id
// pair); only pairs with distance < tau act:
//   neither clustered      -> new cluster {a, b}
//   exactly one clustered  -> the other joins it
//   in different clusters  -> the clusters merge
// Cluster ids are assigned in order of each cluster's smallest member.
std::vector<Cluster> cluster_pairs(std::vector<PairDistance> pairs, double tau);

// Symmetric Chamfer between two models' canonical samples, each rescaled to
// a unit-diagonal box unless the config asks for raw canonical frames.
double model_shape_distance(const CadDatabase& db, const std::string& a, const std::string& b,
                            const PipelineConfig& config);

struct ObjectModel {
  int object_id = 0;
  std::string category;
  std::string model_id;
};

// Pairs are only formed between objects of the same category.
std::vector<Cluster> cluster_retrievals(std::span<const ObjectModel> best, const CadDatabase& db,
                                        const PipelineConfig& config);

struct JointResult {
  std::string model_id;
  double total = 0.0;  // summed over members
  std::vector<Pose9> initial_poses;  // per member
  std::vector<std::pair<std::string, double>> scores;  // per pool model, pool order
};

// Model in `pool` minimizing the summed objective over all members, each at
// its own box-initialized pose.
JointResult joint_retrieve(std::span<const ObjectTask* const> members, std::span<const std::string> pool,
                           const CadDatabase& db, const PipelineConfig& config);

// ---- refinement -----------------------------------------------------------

// Increment layout: translation xyz, left axis-angle rotation xyz, log-scale xyz.
using PoseIncrement = Eigen::Matrix<double, 9, 1>;

Pose9 apply_increment(const Pose9& base, const PoseIncrement& delta);

// Central differences of `objective` at apply_increment(base, delta). In yaw
// mode only the rotation component about `gravity` is differentiated.
PoseIncrement finite_difference_gradient(const std::function<double(const Pose9&)>& objective, const Pose9& base,
                                         const PoseIncrement& delta, const RefinementConfig& config, Axis gravity);

struct RefineResult {
  Pose9 pose;
  ObjectiveBreakdown breakdown;
  ObjectiveBreakdown initial;
  int best_step = -1;  // -1: the starting pose was never improved upon
};

// Adam over the 9 pose parameters; returns the best pose visited, so the
// result never scores worse than `pose0`.
RefineResult refine_pose(const CandidateEvaluator& evaluator, const Pose9& pose0, const RefinementConfig& config,
                         Axis gravity);

// ---- scene ----------------------------------------------------------------

struct RetrievalResult {
  int object_id = 0;
  std::string class_label;
  bool ok = true;
  std::string error;
  std::string model_id;
  Pose9 pose;
  std::optional<ObjectiveBreakdown> breakdown;
  std::optional<int> cluster_id;
  std::vector<RankedCandidate> top_k;
};

struct SceneAnnotation {
  std::string scene_id;
  std::string weight_preset;
  ObjectiveWeights weights;
  std::vector<RetrievalResult> objects;
  std::vector<Cluster> clusters;
};

// Per object: preprocess, cache, top-k; then cloning with joint retrieval
// and refinement against the common model; unclustered objects refine every
// top-k candidate and keep the lowest refined total. Failures are recorded
// per object and do not stop the scene.
SceneAnnotation annotate_scene(const RgbdScan& scan, const CadDatabase& db, const PipelineConfig& config);

namespace reference {

// Sequential evaluation in candidate order; oracle for retrieve_top_k.
std::vector<RankedCandidate> retrieve_top_k_serial(const FrameCache& cache, const Obb& obb,
                                                   std::span<const std::string> candidates, const CadDatabase& db,
                                                   const PipelineConfig& config, std::size_t k);

}  // namespace reference

}  // namespace scancad
