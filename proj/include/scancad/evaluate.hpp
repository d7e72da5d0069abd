#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scancad/cad_db.hpp"
#include "scancad/json_util.hpp"
#include "scancad/pipeline.hpp"

namespace scancad {

struct ObjectDeviation {
  int object_id = 0;
  std::string pred_model;
  std::string ref_model;
  double translation_error = 0.0;  // m, distance between translations
  double rotation_error = 0.0;     // degrees, geodesic angle
  double scale_error = 0.0;        // mean over axes of |s_pred / s_ref - 1|
  double shape_error = 0.0;        // symmetric Chamfer of the scaled, unit-diagonal models
};

// 30 uniform bins on [0, p99] plus one overflow bin for values above p99
// (p99 by nearest rank). When p99 is 0 every value lands in bin 0.
struct Histogram {
  std::string metric;
  double upper = 0.0;
  std::vector<std::size_t> counts;  // 30 entries
  std::size_t overflow = 0;
};

Histogram make_histogram(const std::string& metric, const std::vector<double>& values, int bins = 30);

struct DeviationReport {
  std::vector<ObjectDeviation> objects;  // ascending object id
  std::vector<int> unmatched_pred;  // ids without a reference, or failed in either file
  std::vector<int> unmatched_ref;
  std::vector<Histogram> histograms;  // translation, rotation, scale, shape
};

struct EvaluateOptions {
  std::size_t n_samples = 10000;
  std::uint64_t sample_seed = 0;
};

// Model ids missing from `db` raise kUnknownModel. Throws kNoOverlap when no
// object id is present (and successful) in both annotations.
DeviationReport evaluate_annotations(const SceneAnnotation& pred, const SceneAnnotation& ref, const CadDatabase& db,
                                     const EvaluateOptions& options = {});

double scale_deviation(const Vec3& pred, const Vec3& ref);
double shape_deviation(const CadDatabase& db, const std::string& pred_model, const Vec3& pred_scale,
                       const std::string& ref_model, const Vec3& ref_scale, const EvaluateOptions& options);

json report_to_json(const DeviationReport& report);

// Writes report.json and hist_<metric>.png under `dir`.
void write_report(const DeviationReport& report, const std::filesystem::path& dir);

}  // namespace scancad
