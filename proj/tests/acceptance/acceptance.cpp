#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <CLI11.hpp>

#include "scancad/annotation_io.hpp"
#include "scancad/chamfer.hpp"
#include "scancad/error.hpp"
#include "scancad/evaluate.hpp"
#include "scancad/pipeline.hpp"
#include "scancad/raster.hpp"
#include "scancad/synth.hpp"

namespace fs = std::filesystem;
using namespace scancad;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

PointCloud random_cloud(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(gen), u(gen), u(gen));
  return c;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("scancad_accept_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCANCAD_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 1 -------------------------------------------------------------------------

Outcome chamfer_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::size_t> size(1, 500);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PointCloud p = random_cloud(gen, size(gen));
    const PointCloud q = random_cloud(gen, size(gen));
    worst = std::max(worst, std::abs(chamfer_one_way(p, q) - reference::chamfer_one_way_brute(p, q)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 10.0, "max |diff| " + fmt(worst) + ", " + fmt(t) + " s"};
}

// 2 -------------------------------------------------------------------------

TriMesh quad(double x0, double x1, double y0, double y1, double z) {
  TriMesh m;
  m.vertices = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

Outcome rasterizer_ground_truth() {
  Camera cam;
  cam.intrinsics = {50.0, 50.0, 32.0, 24.0, 64, 48};

  const TriMesh plane = quad(-0.5, 0.5, -0.4, 0.4, 2.0);
  const PosedMesh plane_only[] = {PosedMesh(plane)};
  const DepthMap d = render_depth(plane_only, cam);
  std::size_t covered = 0;
  bool exact = true;
  for (double z : d.values) {
    if (!DepthMap::is_valid(z)) continue;
    ++covered;
    exact = exact && z == 2.0;
  }

  const TriMesh far = quad(-3, 3, -3, 3, 4.0);
  const TriMesh near = quad(-0.2, 0.2, -0.2, 0.2, 1.5);
  const PosedMesh ab[] = {PosedMesh(far), PosedMesh(near)};
  const PosedMesh ba[] = {PosedMesh(near), PosedMesh(far)};
  const DepthMap za = render_depth(ab, cam);
  const DepthMap zb = render_depth(ba, cam);
  const bool occlusion = za.values == zb.values && za.at(32, 24) == 1.5 && za.at(2, 2) == 4.0;

  const auto models = procedural_models(4, 2, 5);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, models.size() - 1);
  int fused_ok = 0;
  for (int s = 0; s < 20; ++s) {
    Pose9 pa, pb;
    pa.translation = Vec3(0.5 * u(gen), 0.5 * u(gen), 0.0);
    pb.translation = Vec3(0.5 * u(gen), 0.5 * u(gen), 0.0);
    pa.rotation = axis_rotation(Axis::kZ, std::numbers::pi * u(gen));
    pb.rotation = axis_rotation(Axis::kZ, std::numbers::pi * u(gen));
    pb.scale = Vec3::Constant(1.0 + 0.2 * u(gen));
    const Camera view = look_at({80.0, 80.0, 40.0, 30.0, 80, 60},
                                Vec3(2.5 * u(gen), 2.5 * u(gen) + 3.0, 1.0 + 0.5 * u(gen)), Vec3(0, 0, 0.4));
    const PosedMesh a[] = {PosedMesh(models[pick(gen)].mesh, pa)};
    const PosedMesh b[] = {PosedMesh(models[pick(gen)].mesh, pb)};
    const PosedMesh both[] = {a[0], b[0]};
    const DepthMap fused = fuse_depth(render_depth(a, view), render_depth(b, view));
    const DepthMap joint = render_depth(both, view);
    bool same = fused.values.size() == joint.values.size();
    for (std::size_t i = 0; same && i < joint.values.size(); ++i) {
      const bool vf = DepthMap::is_valid(fused.values[i]), vj = DepthMap::is_valid(joint.values[i]);
      same = vf == vj && (!vf || fused.values[i] == joint.values[i]);
    }
    fused_ok += same;
  }
  return {covered > 0 && exact && occlusion && fused_ok == 20,
          "plane " + std::string(exact ? "exact" : "inexact") + " on " + std::to_string(covered) + " px, occlusion " +
              (occlusion ? "ok" : "wrong") + ", fused == joint " + std::to_string(fused_ok) + "/20"};
}

// 3 -------------------------------------------------------------------------

Outcome objective_floor() {
  const auto t0 = Clock::now();
  const CadDatabase db = database_from_models(procedural_models(40, 10, 3));
  const SyntheticSceneSpec spec = floor_scene({{"chair_007", "chair"}}, db, 3);
  const SyntheticScene scene = generate_scene(spec, db);
  PipelineConfig cfg;
  const ObjectTask task = prepare_object(scene.scan, scene.scan.annotations[0], db, cfg);
  const Pose9 truth = spec.objects[0].pose;
  const auto eval = [&](const std::string& id, const Pose9& pose) {
    return eval_objective(task.cache, db.model(id), db.sampled_points(id, cfg.n_samples, cfg.sample_seed), pose,
                          cfg.weights, cfg.objective);
  };
  const ObjectiveBreakdown gt = eval("chair_007", truth);
  Pose9 displaced = truth;
  displaced.translation += Vec3(0.5, 0.0, 0.0);
  const double displaced_total = eval("chair_007", displaced).total;
  bool dominates = displaced_total > gt.total;
  double closest_decoy = std::numeric_limits<double>::infinity();
  for (const auto& id : db.candidates_for_class("chair")) {
    if (id == "chair_007") continue;
    const double total = eval(id, initial_pose_from_obb(*task.annotation.obb, db.model(id))).total;
    closest_decoy = std::min(closest_decoy, total);
    dominates = dominates && total > gt.total;
  }
  const double t = seconds_since(t0);
  return {gt.total <= 1e-3 && dominates && t < 120.0,
          "L(gt) " + fmt(gt.total) + " (dpt " + fmt(gt.l_dpt) + ", sil " + fmt(gt.l_sil) + ", cd " + fmt(gt.l_cd) +
              "), displaced " + fmt(displaced_total) + ", best decoy " + fmt(closest_decoy) + ", " + fmt(t) + " s"};
}

// 4 -------------------------------------------------------------------------

Outcome planted_retrieval() {
  const auto t0 = Clock::now();
  const CadDatabase db = database_from_models(procedural_models(40, 10, 4));
  PipelineConfig cfg;
  cfg.weights = ObjectiveWeights::scannet();
  int hits = 0;
  std::string misses;
  for (int s = 0; s < 10; ++s) {
    const bool chair = s % 5 != 4;
    char id[16];
    std::snprintf(id, sizeof id, chair ? "chair_%03d" : "table_%03d", chair ? 4 * s + 1 : s);
    const std::string cls = chair ? "chair" : "table";
    SyntheticSceneSpec spec = floor_scene({{id, cls}}, db, 40 + s);
    const SyntheticScene scene = generate_scene(spec, db);
    const ObjectTask task = prepare_object(scene.scan, scene.scan.annotations[0], db, cfg);
    const auto top = retrieve_top_k(task.cache, *task.annotation.obb, db.candidates_for_class(cls), db, cfg, cfg.top_k);
    if (!top.empty() && top[0].model_id == id) {
      ++hits;
    } else {
      misses += std::string(" ") + id + "->" + (top.empty() ? "none" : top[0].model_id);
    }
  }
  const double t = seconds_since(t0);
  return {hits >= 9 && t < 900.0, std::to_string(hits) + "/10 rank-1" + misses + ", " + fmt(t) + " s"};
}

// 5 -------------------------------------------------------------------------

Outcome perturb_and_recover() {
  const auto t0 = Clock::now();
  const CadDatabase db = database_from_models(procedural_models(10, 2, 7));
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PipelineConfig cfg;
  cfg.n_t = 4;
  cfg.refinement.steps = 120;
  int recovered = 0;
  bool never_worse = true;
  double worst_t = 0.0, worst_r = 0.0, worst_s = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    char id[16];
    std::snprintf(id, sizeof id, "chair_%03d", trial % 10);
    const SyntheticSceneSpec spec = floor_scene({{id, "chair"}}, db, 100 + trial);
    const SyntheticScene scene = generate_scene(spec, db);
    const ObjectTask task = prepare_object(scene.scan, scene.scan.annotations[0], db, cfg);
    const CandidateEvaluator eval(task.cache, db.model(id), db.sampled_points(id, cfg.n_samples, cfg.sample_seed),
                                  cfg.weights, cfg.objective);
    const Pose9 truth = spec.objects[0].pose;
    Pose9 start = truth;
    Vec3 dir(u(gen), u(gen), u(gen));
    start.translation += dir.normalized() * 0.10 * std::abs(u(gen));
    Vec3 axis(u(gen), u(gen), u(gen));
    const double angle = 15.0 * std::abs(u(gen)) * std::numbers::pi / 180.0;
    start.rotation = Quat(Eigen::AngleAxisd(angle, axis.normalized())) * truth.rotation;
    for (int k = 0; k < 3; ++k) start.scale[k] *= 1.0 + 0.1 * u(gen);

    const RefineResult r = refine_pose(eval, start, cfg.refinement, Axis::kZ);
    const double te = (r.pose.translation - truth.translation).norm();
    const double re = deg(rotation_angle_between(r.pose.rotation, truth.rotation));
    double se = 0.0;
    for (int k = 0; k < 3; ++k) se = std::max(se, std::abs(r.pose.scale[k] / truth.scale[k] - 1.0));
    worst_t = std::max(worst_t, te);
    worst_r = std::max(worst_r, re);
    worst_s = std::max(worst_s, se);
    recovered += te <= 0.01 && re <= 2.0 && se <= 0.02;
    never_worse = never_worse && r.breakdown.total <= r.initial.total;
  }
  const double t = seconds_since(t0);
  return {recovered >= 18 && never_worse,
          std::to_string(recovered) + "/20 recovered, never worse " + (never_worse ? "yes" : "no") + ", worst " +
              fmt(worst_t * 100) + " cm / " + fmt(worst_r) + " deg / " + fmt(worst_s * 100) + " %, " + fmt(t) + " s"};
}

// 6 -------------------------------------------------------------------------

// Groups including singletons, so that growing tau can only merge.
std::size_t group_count(const std::vector<Cluster>& clusters, std::size_t n_objects) {
  std::size_t clustered = 0;
  for (const auto& c : clusters) clustered += c.members.size();
  return clusters.size() + (n_objects - clustered);
}

Outcome cloning_behavior() {
  const auto t0 = Clock::now();
  const CadDatabase db = database_from_models(procedural_models(12, 4, 6));
  const std::string chair = "chair_005";
  const SyntheticSceneSpec spec =
      floor_scene({{chair, "chair"}, {chair, "chair"}, {chair, "chair"}, {chair, "chair"}, {"table_002", "table"}}, db, 6);
  const SyntheticScene scene = generate_scene(spec, db);
  PipelineConfig cfg;
  cfg.n_t = 4;
  cfg.refinement.steps = 10;
  cfg.tau = 3e-3;
  const SceneAnnotation out = annotate_scene(scene.scan, db, cfg);

  std::vector<int> chair_ids;
  for (const auto& o : spec.objects) {
    if (o.class_label == "chair") chair_ids.push_back(o.object_id);
  }
  std::sort(chair_ids.begin(), chair_ids.end());
  const bool one_cluster = out.clusters.size() == 1 && out.clusters[0].members == chair_ids;
  const bool planted = one_cluster && out.clusters[0].model_id == chair;
  bool all_equal = true;
  for (const auto& o : out.objects) {
    if (o.class_label == "chair") all_equal = all_equal && o.ok && o.model_id == out.objects[0].model_id;
  }

  // Tau sweep over the per-object best candidates, plus a random configuration.
  std::vector<ObjectModel> best;
  for (const auto& o : out.objects) {
    if (o.ok && !o.top_k.empty()) best.push_back({o.object_id, o.class_label, o.top_k[0].model_id});
  }
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  std::vector<PairDistance> random_pairs;
  for (int a = 0; a < 12; ++a)
    for (int b = a + 1; b < 12; ++b) random_pairs.push_back({a, b, u(gen)});
  bool monotone = true;
  std::size_t prev_scene = best.size() + 1, prev_random = 13;
  for (int i = 0; i <= 40; ++i) {
    const double tau = 1e-5 * std::pow(10.0, i * 0.1);
    PipelineConfig swept = cfg;
    swept.tau = tau;
    const std::size_t n_scene = group_count(cluster_retrievals(best, db, swept), best.size());
    const std::size_t n_random = group_count(cluster_pairs(random_pairs, tau), 12);
    monotone = monotone && n_scene <= prev_scene && n_random <= prev_random;
    prev_scene = n_scene;
    prev_random = n_random;
  }
  const double t = seconds_since(t0);
  std::string clusters;
  for (const auto& c : out.clusters) clusters += " [" + std::to_string(c.members.size()) + ":" + c.model_id + "]";
  return {one_cluster && planted && all_equal && monotone,
          "clusters" + (clusters.empty() ? std::string(" none") : clusters) + ", ids equal " +
              (all_equal ? "yes" : "no") + ", sweep monotone " + (monotone ? "yes" : "no") + ", " + fmt(t) + " s"};
}

// 7 -------------------------------------------------------------------------

std::vector<std::vector<int>> member_lists(const std::vector<Cluster>& cs) {
  std::vector<std::vector<int>> out;
  for (const auto& c : cs) out.push_back(c.members);
  return out;
}

Outcome clustering_trace() {
  const double tau = 3e-3;
  const int A = 1, B = 2, C = 3, D = 4;
  // d(A,B) < tau: rule (a); d(B,C) < tau: rule (b); d(A,C) >= tau acts on nothing.
  const bool three = member_lists(cluster_pairs({{A, B, 1e-3}, {B, C, 2e-3}, {A, C, 5e-3}}, tau)) ==
                     std::vector<std::vector<int>>{{A, B, C}};
  // Without B-C, C stays unclustered.
  const bool lone = member_lists(cluster_pairs({{A, B, 1e-3}, {B, C, 4e-3}, {A, C, 5e-3}}, tau)) ==
                    std::vector<std::vector<int>>{{A, B}};
  // {A,B} and {C,D} by rule (a), merged by rule (c) on B-C.
  const bool merge = member_lists(cluster_pairs({{A, B, 1e-3}, {C, D, 1.5e-3}, {B, C, 2.5e-3}}, tau)) ==
                     std::vector<std::vector<int>>{{A, B, C, D}};
  const bool apart = member_lists(cluster_pairs({{A, B, 1e-3}, {C, D, 1.5e-3}, {B, C, 3e-3}}, tau)) ==
                     std::vector<std::vector<int>>{{A, B}, {C, D}};
  return {three && lone && merge && apart, std::string("join ") + (three ? "ok" : "wrong") + ", lone " +
                                               (lone ? "ok" : "wrong") + ", merge " + (merge ? "ok" : "wrong") +
                                               ", boundary " + (apart ? "ok" : "wrong")};
}

// 8 -------------------------------------------------------------------------

Outcome chamfer_gradient() {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const PointCloud object = random_cloud(gen, 300);
    const PointCloud samples = random_cloud(gen, 400);
    const PosedChamfer chamfer(samples);
    Pose9 pose;
    pose.translation = Vec3(0.2 * u(gen), 0.2 * u(gen), 0.2 * u(gen));
    pose.rotation = axis_rotation(Axis::kZ, u(gen));
    pose.scale = Vec3(1.0 + 0.2 * u(gen), 1.0 + 0.2 * u(gen), 1.0 + 0.2 * u(gen));
    const Vec3 analytic = chamfer_translation_gradient(object, transform_points(pose, samples));
    Vec3 numeric;
    const double h = 1e-7;
    for (int k = 0; k < 3; ++k) {
      Pose9 plus = pose, minus = pose;
      plus.translation[k] += h;
      minus.translation[k] -= h;
      numeric[k] = (chamfer.from_world(object, plus) - chamfer.from_world(object, minus)) / (2 * h);
    }
    worst = std::max(worst, (analytic - numeric).norm() / numeric.norm());
  }
  return {worst <= 1e-4, "max relative error " + fmt(worst)};
}

// 9 -------------------------------------------------------------------------

Outcome evaluation_metrics() {
  const ScratchDir dir("evaluate");
  const fs::path& d = dir.path();
  const fs::path manifest = write_database(procedural_models(1, 0, 9), d / "db");

  Pose9 ref_pose;
  ref_pose.translation = Vec3(0.4, -0.2, 0.45);
  ref_pose.rotation = axis_rotation(Axis::kZ, 0.8);
  ref_pose.scale = Vec3(1.05, 0.95, 1.0);
  const auto annotation = [](const std::vector<Pose9>& poses) {
    SceneAnnotation a;
    a.scene_id = "metrics";
    a.weight_preset = "scannet";
    for (std::size_t i = 0; i < poses.size(); ++i) {
      RetrievalResult r;
      r.object_id = static_cast<int>(i) + 1;
      r.class_label = "chair";
      r.model_id = "chair_000";
      r.pose = poses[i];
      a.objects.push_back(r);
    }
    return a;
  };
  Pose9 offset = ref_pose;
  offset.translation += Vec3(0.0, 0.051, -0.068);  // 8.5 cm
  Pose9 rotated = ref_pose;
  rotated.rotation = Quat(Eigen::AngleAxisd(6.33 * std::numbers::pi / 180.0, Vec3(1, 2, 2).normalized())) *
                     ref_pose.rotation;
  save_annotation(d / "ref.json", annotation({ref_pose, ref_pose}));
  save_annotation(d / "pred.json", annotation({offset, rotated}));

  const std::string db_arg = " --db " + manifest.string();
  const int code_a = run_cli("evaluate --pred " + (d / "pred.json").string() + " --ref " + (d / "ref.json").string() +
                             db_arg + " --out " + (d / "a").string());
  const int code_b = run_cli("evaluate --pred " + (d / "ref.json").string() + " --ref " + (d / "ref.json").string() +
                             db_arg + " --out " + (d / "b").string());
  if (code_a != 0 || code_b != 0) {
    return {false, "evaluate exit codes " + std::to_string(code_a) + ", " + std::to_string(code_b)};
  }
  const json a = json::parse(read_bytes(d / "a" / "report.json"));
  const json b = json::parse(read_bytes(d / "b" / "report.json"));
  const double t = a["objects"][0]["translation_error_m"].get<double>();
  const double r = a["objects"][1]["rotation_error_deg"].get<double>();
  bool zero = b["objects"].size() == 2;
  for (const auto& o : b["objects"]) {
    for (const char* k : {"translation_error_m", "rotation_error_deg", "scale_error", "shape_error"}) {
      zero = zero && o[k].get<double>() == 0.0;
    }
  }
  const bool ok = std::abs(t - 0.085) <= 1e-9 && std::abs(r - 6.33) <= 1e-6 && zero;
  return {ok, "offset " + fmt(t) + " m, rotation " + fmt(r) + " deg, self " + (zero ? "zero" : "nonzero")};
}

// 10 ------------------------------------------------------------------------

Outcome determinism() {
  const ScratchDir dir("determinism");
  const std::string d = dir.path().string();
  std::ofstream(dir.path() / "config.json")
      << R"({"n_t": 3, "n_samples": 3000, "refinement": {"steps": 8}})";
  int code = run_cli("synth-db --chairs 6 --tables 2 --seed 10 --out " + d + "/db");
  code = code ? code : run_cli("synth --db " + d + "/db/db.jsonl --models chair_001:chair,chair_001:chair,table_000:table --seed 10 --out " + d + "/scene");
  const std::string common = "annotate --scene " + d + "/scene/manifest.json --db " + d + "/db/db.jsonl --config " + d +
                             "/config.json";
  code = code ? code : run_cli(common + " --threads 1 --out " + d + "/t1");
  code = code ? code : run_cli(common + " --threads 8 --out " + d + "/t8");
  if (code != 0) return {false, "cli exit code " + std::to_string(code)};
  const std::string one = read_bytes(dir.path() / "t1" / "annotation.json");
  const std::string eight = read_bytes(dir.path() / "t8" / "annotation.json");
  return {!one.empty() && one == eight, std::to_string(one.size()) + " bytes, " + (one == eight ? "identical" : "differ")};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "run only these criteria (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "chamfer oracle equivalence", chamfer_oracle},
      {2, "rasterizer ground truth", rasterizer_ground_truth},
      {3, "objective floor", objective_floor},
      {4, "planted-model retrieval", planted_retrieval},
      {5, "perturb-and-recover refinement", perturb_and_recover},
      {6, "cloning behavior", cloning_behavior},
      {7, "clustering rule trace", clustering_trace},
      {8, "chamfer-term gradient check", chamfer_gradient},
      {9, "evaluation metrics", evaluation_metrics},
      {10, "determinism", determinism},
  };
  bool ok = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.name << "): " << o.detail
              << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
