#include "scancad/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "scancad/chamfer.hpp"
#include "scancad/error.hpp"
#include "scancad/io.hpp"

namespace scancad {

Histogram make_histogram(const std::string& metric, const std::vector<double>& values, int bins) {
  Histogram h;
  h.metric = metric;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) return h;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
  h.upper = sorted[std::max<std::size_t>(rank, 1) - 1];
  for (double v : values) {
    if (v > h.upper) {
      ++h.overflow;
    } else if (h.upper <= 0.0) {
      ++h.counts[0];
    } else {
      const auto b = static_cast<std::size_t>(std::floor(v / h.upper * bins));
      ++h.counts[std::min<std::size_t>(b, static_cast<std::size_t>(bins) - 1)];
    }
  }
  return h;
}

double scale_deviation(const Vec3& pred, const Vec3& ref) {
  return ((pred.array() / ref.array()) - 1.0).abs().mean();
}

double shape_deviation(const CadDatabase& db, const std::string& pred_model, const Vec3& pred_scale,
                       const std::string& ref_model, const Vec3& ref_scale, const EvaluateOptions& options) {
  const auto scaled = [&](const std::string& id, const Vec3& s) {
    PointCloud c = *db.sampled_points(id, options.n_samples, options.sample_seed);
    for (auto& p : c.points) p = p.cwiseProduct(s);
    return normalize_unit_diagonal(c);
  };
  return chamfer_symmetric(scaled(pred_model, pred_scale), scaled(ref_model, ref_scale));
}

DeviationReport evaluate_annotations(const SceneAnnotation& pred, const SceneAnnotation& ref, const CadDatabase& db,
                                     const EvaluateOptions& options) {
  std::map<int, const RetrievalResult*> p_ok, r_ok;
  DeviationReport report;
  for (const auto& o : pred.objects) {
    if (o.ok) p_ok[o.object_id] = &o;
  }
  for (const auto& o : ref.objects) {
    if (o.ok) r_ok[o.object_id] = &o;
  }
  for (const auto& o : pred.objects) {
    if (!o.ok || !r_ok.count(o.object_id)) report.unmatched_pred.push_back(o.object_id);
  }
  for (const auto& o : ref.objects) {
    if (!o.ok || !p_ok.count(o.object_id)) report.unmatched_ref.push_back(o.object_id);
  }
  std::sort(report.unmatched_pred.begin(), report.unmatched_pred.end());
  std::sort(report.unmatched_ref.begin(), report.unmatched_ref.end());

  for (const auto& [id, p] : p_ok) {
    const auto it = r_ok.find(id);
    if (it == r_ok.end()) continue;
    const RetrievalResult& r = *it->second;
    ObjectDeviation d;
    d.object_id = id;
    d.pred_model = p->model_id;
    d.ref_model = r.model_id;
    d.translation_error = (p->pose.translation - r.pose.translation).norm();
    d.rotation_error = rotation_angle_between(p->pose.rotation, r.pose.rotation) * 180.0 / std::numbers::pi;
    d.scale_error = scale_deviation(p->pose.scale, r.pose.scale);
    d.shape_error = shape_deviation(db, p->model_id, p->pose.scale, r.model_id, r.pose.scale, options);
    report.objects.push_back(d);
  }
  if (report.objects.empty()) throw Error(ErrorCode::kNoOverlap, "no object id is annotated in both files");

  std::vector<double> t, r, s, c;
  for (const auto& d : report.objects) {
    t.push_back(d.translation_error);
    r.push_back(d.rotation_error);
    s.push_back(d.scale_error);
    c.push_back(d.shape_error);
  }
  report.histograms = {make_histogram("translation", t), make_histogram("rotation", r), make_histogram("scale", s),
                       make_histogram("shape", c)};
  return report;
}

namespace {

json summary(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  double sum = 0.0;
  for (double x : s) sum += x;
  const std::size_t n = s.size();
  const double median = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  return json{{"mean", sum / static_cast<double>(n)}, {"median", median}, {"max", s.back()}};
}

Image8 histogram_image(const Histogram& h) {
  constexpr int kBar = 8;
  constexpr int kHeight = 120;
  const int bars = static_cast<int>(h.counts.size()) + 1;
  Image8 img{bars * kBar, kHeight, std::vector<std::uint8_t>(static_cast<std::size_t>(bars * kBar * kHeight), 255)};
  std::size_t peak = h.overflow;
  for (auto c : h.counts) peak = std::max(peak, c);
  if (peak == 0) return img;
  for (int b = 0; b < bars; ++b) {
    const std::size_t count = b < bars - 1 ? h.counts[static_cast<std::size_t>(b)] : h.overflow;
    const int height = static_cast<int>(std::lround(static_cast<double>(count) / static_cast<double>(peak) * (kHeight - 4)));
    const std::uint8_t shade = b < bars - 1 ? 40 : 140;
    for (int y = kHeight - height; y < kHeight; ++y) {
      for (int x = b * kBar + 1; x < (b + 1) * kBar - 1; ++x) img.pixels[static_cast<std::size_t>(y * img.width + x)] = shade;
    }
  }
  return img;
}

}  // namespace

json report_to_json(const DeviationReport& report) {
  json objects = json::array();
  std::vector<double> t, r, s, c;
  for (const auto& d : report.objects) {
    objects.push_back({{"object_id", d.object_id},
                       {"pred_model", d.pred_model},
                       {"ref_model", d.ref_model},
                       {"translation_error_m", d.translation_error},
                       {"rotation_error_deg", d.rotation_error},
                       {"scale_error", d.scale_error},
                       {"shape_error", d.shape_error}});
    t.push_back(d.translation_error);
    r.push_back(d.rotation_error);
    s.push_back(d.scale_error);
    c.push_back(d.shape_error);
  }
  json hist = json::object();
  for (const auto& h : report.histograms) {
    hist[h.metric] = {{"upper", h.upper}, {"counts", h.counts}, {"overflow", h.overflow}};
  }
  return json{
      {"metadata",
       {{"translation_error", "Euclidean distance between translations, meters"},
        {"rotation_error", "geodesic angle between rotations, degrees"},
        {"scale_error", "mean over axes of |s_pred / s_ref - 1|"},
        {"shape_error",
         "symmetric Chamfer between surface samples of both models, each scaled by its pose scale and rescaled to a "
         "unit-diagonal bounding box"},
        {"histogram_binning", "30 uniform bins on [0, upper], upper = 99th percentile (nearest rank); values above "
                              "upper counted in overflow"}}},
      {"objects", std::move(objects)},
      {"aggregate",
       report.objects.empty()
           ? json(nullptr)
           : json{{"count", report.objects.size()},
                  {"translation_error_m", summary(t)},
                  {"rotation_error_deg", summary(r)},
                  {"scale_error", summary(s)},
                  {"shape_error", summary(c)}}},
      {"unmatched_pred", report.unmatched_pred},
      {"unmatched_ref", report.unmatched_ref},
      {"histograms", std::move(hist)}};
}

void write_report(const DeviationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", report_to_json(report).dump(2) + "\n");
  for (const auto& h : report.histograms) write_png8(dir / ("hist_" + h.metric + ".png"), histogram_image(h));
}

}  // namespace scancad
