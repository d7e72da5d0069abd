#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "scancad/annotation_io.hpp"
#include "scancad/config.hpp"
#include "scancad/error.hpp"
#include "scancad/evaluate.hpp"
#include "scancad/io.hpp"
#include "scancad/overlay.hpp"
#include "scancad/pipeline.hpp"
#include "scancad/synth.hpp"

namespace fs = std::filesystem;
using namespace scancad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitManifest = 2;
constexpr int kExitDatabase = 3;
constexpr int kExitAllFailed = 4;
constexpr int kExitNoOverlap = 5;

struct Common {
  std::string config;
  std::string preset;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "pipeline config (JSON)");
  cmd->add_option("--preset", c.preset, "weight preset")->check(CLI::IsMember({"scannet", "arkitscenes"}));
  cmd->add_option("--threads", c.threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "sampling / generation seed");
  cmd->add_option("--out", c.out, "output directory");
}

PipelineConfig resolve_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (!c.preset.empty()) apply_preset(cfg, c.preset);
  if (c.seed) cfg.sample_seed = *c.seed;
  return cfg;
}

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

CadDatabase load_database(const std::string& path, const PipelineConfig& cfg, Axis up) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingAsset, "database manifest " + path + " not found");
  CadDatabase db = CadDatabase::load(path, up);
  db.set_cache_dir(cfg.cache_dir);
  return db;
}

int log_error(const std::string& stage, const std::exception& e, int code) {
  std::cerr << "error: " << stage << ": " << e.what() << "\n";
  return code;
}

std::vector<std::pair<std::string, std::string>> parse_models(const std::string& list) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "model entry '" + item + "' is not id:class");
    out.emplace_back(item.substr(0, colon), item.substr(colon + 1));
  }
  return out;
}

int run_annotate(const Common& c, const std::string& scene_path, const std::string& db_path) {
  set_threads(c.threads);
  PipelineConfig cfg;
  RgbdScan scan;
  try {
    cfg = resolve_config(c);
    scan = load_scan(scene_path);
  } catch (const std::exception& e) {
    return log_error("scene", e, kExitManifest);
  }
  CadDatabase db;
  try {
    db = load_database(db_path, cfg, scan.gravity_axis);
  } catch (const std::exception& e) {
    return log_error("database", e, kExitDatabase);
  }
  const SceneAnnotation result = annotate_scene(scan, db, cfg);
  std::size_t failures = 0;
  for (const auto& o : result.objects) {
    if (!o.ok) {
      ++failures;
      std::cerr << "warning: object " << o.object_id << " (" << o.class_label << ") failed: " << o.error << "\n";
    }
  }
  fs::create_directories(c.out);
  const fs::path out = fs::path(c.out) / "annotation.json";
  save_annotation(out, result);
  std::cerr << "wrote " << out.string() << " (" << result.objects.size() - failures << "/" << result.objects.size()
            << " objects, " << result.clusters.size() << " clusters)\n";
  return !result.objects.empty() && failures == result.objects.size() ? kExitAllFailed : kExitOk;
}

int run_synth(const Common& c, const std::string& spec_path, const std::string& db_path, const std::string& models,
              double noise) {
  set_threads(c.threads);
  CadDatabase db;
  try {
    db = load_database(db_path, PipelineConfig{}, Axis::kZ);
  } catch (const std::exception& e) {
    return log_error("database", e, kExitDatabase);
  }
  try {
    SyntheticSceneSpec spec;
    if (!spec_path.empty()) {
      spec = synth_spec_from_json(parse_json(read_text_file(spec_path), spec_path));
      if (c.seed) spec.seed = *c.seed;
    } else {
      spec = floor_scene(parse_models(models), db, c.seed.value_or(0));
    }
    if (noise >= 0.0) spec.noise_std = noise;
    write_synthetic_scene(generate_scene(spec, db), c.out);
    write_file_atomic(fs::path(c.out) / "spec.json", synth_spec_to_json(spec).dump(2) + "\n");
  } catch (const std::exception& e) {
    return log_error("synth", e, kExitManifest);
  }
  std::cerr << "wrote " << (fs::path(c.out) / "manifest.json").string() << "\n";
  return kExitOk;
}

int run_synth_db(const Common& c, int chairs, int tables, double spacing) {
  const auto models = procedural_models(chairs, tables, c.seed.value_or(0), spacing);
  const fs::path manifest = write_database(models, c.out);
  std::cerr << "wrote " << manifest.string() << " (" << models.size() << " models)\n";
  return kExitOk;
}

int run_evaluate(const Common& c, const std::string& pred_path, const std::string& ref_path,
                 const std::string& db_path) {
  set_threads(c.threads);
  SceneAnnotation pred, ref;
  try {
    pred = load_annotation(pred_path);
    ref = load_annotation(ref_path);
  } catch (const std::exception& e) {
    return log_error("annotations", e, kExitManifest);
  }
  CadDatabase db;
  PipelineConfig cfg;
  try {
    cfg = resolve_config(c);
    db = load_database(db_path, cfg, Axis::kZ);
  } catch (const std::exception& e) {
    return log_error("database", e, kExitDatabase);
  }
  try {
    const DeviationReport report = evaluate_annotations(pred, ref, db, {cfg.n_samples, cfg.sample_seed});
    write_report(report, c.out);
    std::cerr << "evaluated " << report.objects.size() << " objects -> " << (fs::path(c.out) / "report.json").string()
              << "\n";
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoOverlap) return log_error("evaluate", e, kExitNoOverlap);
    if (e.code() == ErrorCode::kUnknownModel) return log_error("evaluate", e, kExitDatabase);
    throw;
  }
  return kExitOk;
}

int run_overlays(const Common& c, const std::string& scene_path, const std::string& ann_path,
                 const std::string& db_path, const std::vector<std::size_t>& frames) {
  set_threads(c.threads);
  RgbdScan scan;
  SceneAnnotation ann;
  try {
    scan = load_scan(scene_path);
    ann = load_annotation(ann_path);
  } catch (const std::exception& e) {
    return log_error("inputs", e, kExitManifest);
  }
  CadDatabase db;
  try {
    db = load_database(db_path, PipelineConfig{}, scan.gravity_axis);
  } catch (const std::exception& e) {
    return log_error("database", e, kExitDatabase);
  }
  write_overlays(scan, ann, db, c.out, frames);
  std::cerr << "wrote overlays to " << c.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAD retrieval and alignment for RGB-D scans by analysis-by-synthesis"};
  app.require_subcommand(1);

  Common annotate_opts, synth_opts, synthdb_opts, eval_opts, overlay_opts;
  std::string scene, db, spec, models, pred, ref, annotation;
  double noise = -1.0;
  int chairs = 50, tables = 10;
  double spacing = 0.04;
  std::vector<std::size_t> frames;

  auto* annotate = app.add_subcommand("annotate", "retrieve and align CAD models for every annotated object");
  add_common(annotate, annotate_opts);
  annotate->add_option("--scene", scene, "scan manifest.json")->required();
  annotate->add_option("--db", db, "CAD database manifest (JSON lines)")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic scan with ground truth");
  add_common(synth, synth_opts);
  synth->add_option("--db", db, "CAD database manifest")->required();
  auto* spec_opt = synth->add_option("--spec", spec, "scene spec (JSON)");
  synth->add_option("--models", models, "comma-separated id:class list placed on the floor")->excludes(spec_opt);
  synth->add_option("--noise", noise, "depth noise std (m)");

  auto* synth_db = app.add_subcommand("synth-db", "write a procedural chair/table database");
  add_common(synth_db, synthdb_opts);
  synth_db->add_option("--chairs", chairs)->check(CLI::NonNegativeNumber);
  synth_db->add_option("--tables", tables)->check(CLI::NonNegativeNumber);
  synth_db->add_option("--spacing", spacing, "mesh vertex spacing (m)")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "deviation report of predicted vs reference annotations");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--pred", pred)->required();
  evaluate->add_option("--ref", ref)->required();
  evaluate->add_option("--db", db)->required();

  auto* overlays = app.add_subcommand("render-overlays", "export depth and reprojected silhouettes per frame");
  add_common(overlays, overlay_opts);
  overlays->add_option("--scene", scene)->required();
  overlays->add_option("--annotation", annotation)->required();
  overlays->add_option("--db", db)->required();
  overlays->add_option("--frames", frames, "frame indices (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*annotate) return run_annotate(annotate_opts, scene, db);
    if (*synth) {
      if (spec.empty() && models.empty()) {
        std::cerr << "error: synth needs --spec or --models\n";
        return kExitUsage;
      }
      return run_synth(synth_opts, spec, db, models, noise);
    }
    if (*synth_db) return run_synth_db(synthdb_opts, chairs, tables, spacing);
    if (*evaluate) return run_evaluate(eval_opts, pred, ref, db);
    if (*overlays) return run_overlays(overlay_opts, scene, annotation, db, frames);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
