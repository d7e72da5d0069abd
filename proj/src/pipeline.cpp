#include "scancad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>

#include "scancad/chamfer.hpp"
#include "scancad/error.hpp"

namespace scancad {

namespace {

bool ranked_less(const RankedCandidate& a, const RankedCandidate& b) {
  if (a.breakdown.total != b.breakdown.total) return a.breakdown.total < b.breakdown.total;
  return a.model_id < b.model_id;
}

std::string mapped_label(const PipelineConfig& config, const std::string& label) {
  const auto it = config.class_map.find(label);
  return it == config.class_map.end() ? label : it->second;
}

// Evaluates one candidate at its box pose. Models with a zero canonical
// extent cannot be fitted to a box and are skipped (nullopt).
std::optional<RankedCandidate> score_candidate(const FrameCache& cache, const Obb& obb, const std::string& id,
                                               const CadDatabase& db, const PipelineConfig& config) {
  const CadModel& model = db.model(id);
  Pose9 pose;
  try {
    pose = initial_pose_from_obb(obb, model);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateModel) return std::nullopt;
    throw;
  }
  const CandidateEvaluator eval(cache, model, db.sampled_points(id, config.n_samples, config.sample_seed),
                                config.weights, config.objective);
  return RankedCandidate{id, pose, eval(pose)};
}

std::vector<RankedCandidate> keep_best(std::vector<std::optional<RankedCandidate>> scored, std::size_t k,
                                       std::size_t n_candidates) {
  std::vector<RankedCandidate> out;
  for (auto& s : scored) {
    if (s) out.push_back(std::move(*s));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kDegenerateModel,
                "all " + std::to_string(n_candidates) + " candidates have a degenerate canonical extent");
  }
  std::sort(out.begin(), out.end(), ranked_less);
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace

const std::vector<std::string>& resolve_candidates(const CadDatabase& db, const PipelineConfig& config,
                                                   const std::string& class_label) {
  return db.candidates_for_class(mapped_label(config, class_label));
}

ObjectTask prepare_object(const RgbdScan& scan, const ObjectAnnotation& ann, const CadDatabase& db,
                          const PipelineConfig& config) {
  ObjectTask task;
  task.category = db.category_for(mapped_label(config, ann.class_label));
  task.annotation = derive_missing_supervision(scan, ann, config.segmentation_margin);
  task.selection = select_frames(scan, *task.annotation.obb, config.n_t, config.frame_spacing, ann.object_id);
  task.cache = build_frame_cache(scan, task.annotation, task.selection, config.render_downsample);
  return task;
}

std::vector<RankedCandidate> retrieve_top_k(const FrameCache& cache, const Obb& obb,
                                            std::span<const std::string> candidates, const CadDatabase& db,
                                            const PipelineConfig& config, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(candidates.size());
  std::vector<std::optional<RankedCandidate>> scored(candidates.size());
  std::vector<std::exception_ptr> errors(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      scored[i] = score_candidate(cache, obb, candidates[i], db, config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return keep_best(std::move(scored), k, candidates.size());
}

namespace reference {

std::vector<RankedCandidate> retrieve_top_k_serial(const FrameCache& cache, const Obb& obb,
                                                   std::span<const std::string> candidates, const CadDatabase& db,
                                                   const PipelineConfig& config, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  std::vector<std::optional<RankedCandidate>> scored;
  for (const auto& id : candidates) scored.push_back(score_candidate(cache, obb, id, db, config));
  return keep_best(std::move(scored), k, candidates.size());
}

}  // namespace reference

// ---- cloning --------------------------------------------------------------

std::vector<Cluster> cluster_pairs(std::vector<PairDistance> pairs, double tau) {
  for (auto& p : pairs) {
    if (p.a == p.b) throw Error(ErrorCode::kInvalidArgument, "pair of an object with itself");
    if (p.a > p.b) std::swap(p.a, p.b);
  }
  std::sort(pairs.begin(), pairs.end(), [](const PairDistance& x, const PairDistance& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::map<int, int> owner;                // object -> group index
  std::vector<std::vector<int>> groups;    // emptied when merged away
  for (const auto& p : pairs) {
    if (!(p.distance < tau)) break;
    const auto ia = owner.find(p.a);
    const auto ib = owner.find(p.b);
    if (ia == owner.end() && ib == owner.end()) {
      owner[p.a] = owner[p.b] = static_cast<int>(groups.size());
      groups.push_back({p.a, p.b});
    } else if (ia == owner.end()) {
      owner[p.a] = ib->second;
      groups[ib->second].push_back(p.a);
    } else if (ib == owner.end()) {
      owner[p.b] = ia->second;
      groups[ia->second].push_back(p.b);
    } else if (ia->second != ib->second) {
      const int keep = ia->second;
      const int gone = ib->second;
      for (int m : groups[gone]) {
        owner[m] = keep;
        groups[keep].push_back(m);
      }
      groups[gone].clear();
    }
  }

  std::vector<Cluster> clusters;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    clusters.push_back({0, g, {}});
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& x, const Cluster& y) { return x.members.front() < y.members.front(); });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].cluster_id = static_cast<int>(i);
  return clusters;
}

double model_shape_distance(const CadDatabase& db, const std::string& a, const std::string& b,
                            const PipelineConfig& config) {
  if (a == b) return 0.0;
  const auto pa = db.sampled_points(a, config.n_samples, config.sample_seed);
  const auto pb = db.sampled_points(b, config.n_samples, config.sample_seed);
  if (config.cluster_normalization == ClusterNormalization::kRaw) return chamfer_symmetric(*pa, *pb);
  return chamfer_symmetric(normalize_unit_diagonal(*pa), normalize_unit_diagonal(*pb));
}

std::vector<Cluster> cluster_retrievals(std::span<const ObjectModel> best, const CadDatabase& db,
                                        const PipelineConfig& config) {
  std::map<std::pair<std::string, std::string>, double> memo;
  std::vector<PairDistance> pairs;
  for (std::size_t i = 0; i < best.size(); ++i) {
    for (std::size_t j = i + 1; j < best.size(); ++j) {
      if (best[i].category != best[j].category) continue;
      auto key = std::minmax(best[i].model_id, best[j].model_id);
      auto it = memo.find({key.first, key.second});
      if (it == memo.end()) {
        it = memo.emplace(std::pair{key.first, key.second},
                          model_shape_distance(db, key.first, key.second, config)).first;
      }
      pairs.push_back({best[i].object_id, best[j].object_id, it->second});
    }
  }
  return cluster_pairs(std::move(pairs), config.tau);
}

JointResult joint_retrieve(std::span<const ObjectTask* const> members, std::span<const std::string> pool,
                           const CadDatabase& db, const PipelineConfig& config) {
  if (members.empty() || pool.empty()) throw Error(ErrorCode::kInvalidArgument, "joint retrieval needs members and models");
  const std::size_t nm = members.size();
  const std::size_t n = pool.size() * nm;
  std::vector<double> totals(n, 0.0);
  std::vector<char> usable(pool.size(), 1);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(n); ++idx) {
    const std::size_t m = static_cast<std::size_t>(idx) / nm;
    const std::size_t o = static_cast<std::size_t>(idx) % nm;
    try {
      const auto r = score_candidate(members[o]->cache, *members[o]->annotation.obb, pool[m], db, config);
      if (r) {
        totals[idx] = r->breakdown.total;
      } else {
#pragma omp atomic write
        usable[m] = 0;
      }
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  JointResult result;
  bool found = false;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    if (!usable[m]) continue;
    double sum = 0.0;
    for (std::size_t o = 0; o < nm; ++o) sum += totals[m * nm + o];
    result.scores.emplace_back(pool[m], sum);
    if (!found || sum < result.total) {
      found = true;
      result.total = sum;
      result.model_id = pool[m];
    }
  }
  if (!found) throw Error(ErrorCode::kDegenerateModel, "no usable model in the clone pool");
  const CadModel& model = db.model(result.model_id);
  for (const ObjectTask* t : members) result.initial_poses.push_back(initial_pose_from_obb(*t->annotation.obb, model));
  return result;
}

// ---- refinement -----------------------------------------------------------

Pose9 apply_increment(const Pose9& base, const PoseIncrement& delta) {
  Pose9 p;
  p.translation = base.translation + delta.segment<3>(0);
  const Vec3 w = delta.segment<3>(3);
  const double angle = w.norm();
  const Quat dq = angle > 0.0 ? Quat(Eigen::AngleAxisd(angle, w / angle)) : Quat::Identity();
  p.rotation = (dq * base.rotation).normalized();
  p.scale = base.scale.cwiseProduct(delta.segment<3>(6).array().exp().matrix());
  return p;
}

namespace {

std::vector<int> active_parameters(const RefinementConfig& config, Axis gravity) {
  if (config.rotation_mode == RotationMode::kFull) return {0, 1, 2, 3, 4, 5, 6, 7, 8};
  return {0, 1, 2, 3 + static_cast<int>(gravity), 6, 7, 8};
}

double step_size(const RefinementConfig& c, int i) {
  return i < 3 ? c.eps_translation : (i < 6 ? c.eps_rotation : c.eps_log_scale);
}

double learning_rate(const RefinementConfig& c, int i) {
  return i < 3 ? c.lr_translation : (i < 6 ? c.lr_rotation : c.lr_log_scale);
}

}  // namespace

PoseIncrement finite_difference_gradient(const std::function<double(const Pose9&)>& objective, const Pose9& base,
                                         const PoseIncrement& delta, const RefinementConfig& config, Axis gravity) {
  const std::vector<int> active = active_parameters(config, gravity);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(active.size());
  std::vector<double> values(2 * active.size());
  std::vector<std::exception_ptr> errors(values.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < 2 * n; ++j) {
    const int i = active[j / 2];
    PoseIncrement d = delta;
    d[i] += (j % 2 == 0 ? 1.0 : -1.0) * step_size(config, i);
    try {
      values[j] = objective(apply_increment(base, d));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  PoseIncrement g = PoseIncrement::Zero();
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const int i = active[k];
    g[i] = (values[2 * k] - values[2 * k + 1]) / (2.0 * step_size(config, i));
  }
  return g;
}

RefineResult refine_pose(const CandidateEvaluator& evaluator, const Pose9& pose0, const RefinementConfig& config,
                         Axis gravity) {
  config.validate();
  const auto objective = [&evaluator](const Pose9& p) { return evaluator(p).total; };
  RefineResult result;
  result.pose = pose0;
  result.initial = evaluator(pose0);
  result.breakdown = result.initial;

  const std::vector<int> active = active_parameters(config, gravity);
  PoseIncrement delta = PoseIncrement::Zero();
  PoseIncrement m = PoseIncrement::Zero();
  PoseIncrement v = PoseIncrement::Zero();
  constexpr double kAdamEps = 1e-8;
  for (int step = 0; step < config.steps; ++step) {
    const PoseIncrement g = finite_difference_gradient(objective, pose0, delta, config, gravity);
    const double progress = config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 0.0;
    const double decay = std::pow(config.final_lr_fraction, progress);
    const double bc1 = 1.0 - std::pow(config.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(config.beta2, step + 1);
    for (int i : active) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      delta[i] -= decay * learning_rate(config, i) * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
    }
    const Pose9 pose = apply_increment(pose0, delta);
    const ObjectiveBreakdown b = evaluator(pose);
    if (b.total < result.breakdown.total) {
      result.breakdown = b;
      result.pose = pose;
      result.best_step = step;
    }
  }
  return result;
}

// ---- scene ----------------------------------------------------------------

namespace {

RetrievalResult failed(const ObjectAnnotation& ann, const std::string& message) {
  RetrievalResult r;
  r.object_id = ann.object_id;
  r.class_label = ann.class_label;
  r.ok = false;
  r.error = message;
  return r;
}

void refine_into(RetrievalResult& r, const ObjectTask& task, const std::string& model_id, const Pose9& pose0,
                 const CadDatabase& db, const PipelineConfig& config, Axis gravity) {
  const CandidateEvaluator eval(task.cache, db.model(model_id),
                                db.sampled_points(model_id, config.n_samples, config.sample_seed), config.weights,
                                config.objective);
  const RefineResult rr = refine_pose(eval, pose0, config.refinement, gravity);
  r.model_id = model_id;
  r.pose = rr.pose;
  r.breakdown = rr.breakdown;
}

}  // namespace

SceneAnnotation annotate_scene(const RgbdScan& scan, const CadDatabase& db, const PipelineConfig& config) {
  config.validate();
  SceneAnnotation out;
  out.scene_id = scan.scene_id;
  out.weight_preset = config.preset;
  out.weights = config.weights;

  const std::size_t n = scan.annotations.size();
  std::vector<std::optional<ObjectTask>> tasks(n);
  out.objects.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ObjectAnnotation& ann = scan.annotations[i];
    try {
      ObjectTask task = prepare_object(scan, ann, db, config);
      const auto& candidates = resolve_candidates(db, config, ann.class_label);
      task.top_k = retrieve_top_k(task.cache, *task.annotation.obb, candidates, db, config, config.top_k);
      out.objects[i].object_id = ann.object_id;
      out.objects[i].class_label = ann.class_label;
      out.objects[i].top_k = task.top_k;
      tasks[i] = std::move(task);
    } catch (const std::exception& e) {
      out.objects[i] = failed(ann, e.what());
    }
  }

  std::map<int, std::size_t> index_of;
  std::vector<ObjectModel> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (!tasks[i]) continue;
    index_of[scan.annotations[i].object_id] = i;
    best.push_back({scan.annotations[i].object_id, tasks[i]->category, tasks[i]->top_k.front().model_id});
  }

  std::vector<char> done(n, 0);
  if (config.cloning && best.size() > 1) {
    std::vector<Cluster> clusters;
    try {
      clusters = cluster_retrievals(best, db, config);
    } catch (const std::exception&) {
      clusters.clear();  // members fall back to independent refinement
    }
    for (Cluster& c : clusters) {
      std::vector<const ObjectTask*> members;
      std::set<std::string> pool_set;
      for (int id : c.members) {
        const ObjectTask& t = *tasks[index_of.at(id)];
        members.push_back(&t);
        for (const auto& rc : t.top_k) pool_set.insert(rc.model_id);
      }
      try {
        std::vector<std::string> pool;
        if (config.clone_pool == ClonePool::kCategory) {
          pool = resolve_candidates(db, config, members.front()->annotation.class_label);
        } else {
          pool.assign(pool_set.begin(), pool_set.end());
        }
        const JointResult joint = joint_retrieve(members, pool, db, config);
        c.model_id = joint.model_id;
        for (std::size_t k = 0; k < members.size(); ++k) {
          const std::size_t i = index_of.at(c.members[k]);
          try {
            refine_into(out.objects[i], *members[k], joint.model_id, joint.initial_poses[k], db, config,
                        scan.gravity_axis);
            out.objects[i].cluster_id = c.cluster_id;
          } catch (const std::exception& e) {
            out.objects[i] = failed(scan.annotations[i], e.what());
          }
          done[i] = 1;
        }
        out.clusters.push_back(c);
      } catch (const std::exception&) {
        // leave the members to independent handling
      }
    }
    for (std::size_t i = 0; i < out.clusters.size(); ++i) {
      const int old_id = out.clusters[i].cluster_id;
      out.clusters[i].cluster_id = static_cast<int>(i);
      for (int id : out.clusters[i].members) {
        auto& r = out.objects[index_of.at(id)];
        if (r.cluster_id && *r.cluster_id == old_id) r.cluster_id = static_cast<int>(i);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!tasks[i] || done[i]) continue;
    const ObjectTask& task = *tasks[i];
    RetrievalResult& r = out.objects[i];
    try {
      std::optional<RetrievalResult> winner;
      for (const RankedCandidate& rc : task.top_k) {
        RetrievalResult trial = r;
        refine_into(trial, task, rc.model_id, rc.pose, db, config, scan.gravity_axis);
        if (!winner || trial.breakdown->total < winner->breakdown->total) winner = std::move(trial);
      }
      r = std::move(*winner);
    } catch (const std::exception& e) {
      r = failed(scan.annotations[i], e.what());
    }
  }
  return out;
}

}  // namespace scancad
