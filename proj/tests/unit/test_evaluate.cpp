#include <doctest.h>

#include <numbers>

#include "scancad/error.hpp"
#include "scancad/evaluate.hpp"
#include "scancad/synth.hpp"
#include "test_util.hpp"

using namespace scancad;

namespace {

SceneAnnotation annotation_with(const std::vector<std::pair<int, Pose9>>& objects, const std::string& model) {
  SceneAnnotation a;
  a.scene_id = "s";
  for (const auto& [id, pose] : objects) {
    RetrievalResult r;
    r.object_id = id;
    r.class_label = "chair";
    r.model_id = model;
    r.pose = pose;
    a.objects.push_back(r);
  }
  return a;
}

}  // namespace

TEST_CASE("evaluating an annotation against itself gives zero deviation") {
  const CadDatabase db = database_from_models(procedural_models(2, 0, 1));
  Pose9 p;
  p.translation = Vec3(1, 0, 0.4);
  p.rotation = axis_rotation(Axis::kZ, 0.7);
  const SceneAnnotation a = annotation_with({{1, p}, {2, Pose9{}}}, "chair_000");
  const DeviationReport r = evaluate_annotations(a, a, db, {2000, 0});
  REQUIRE(r.objects.size() == 2);
  for (const auto& o : r.objects) {
    CHECK(o.translation_error == 0.0);
    CHECK(o.rotation_error < 1e-6);
    CHECK(o.scale_error == 0.0);
    CHECK(o.shape_error == 0.0);
  }
}

TEST_CASE("translation, rotation and scale deviations match hand-computed values") {
  const CadDatabase db = database_from_models(procedural_models(2, 0, 1));
  Pose9 ref;
  Pose9 pred;
  pred.translation = Vec3(0.05, 0.0, -0.0687386354243376);  // |t| = 0.085
  pred.rotation = axis_rotation(Axis::kZ, 6.33 * std::numbers::pi / 180.0);
  pred.scale = Vec3(1.1, 0.9, 1.0);
  const DeviationReport r =
      evaluate_annotations(annotation_with({{1, pred}}, "chair_000"), annotation_with({{1, ref}}, "chair_000"), db);
  REQUIRE(r.objects.size() == 1);
  CHECK(r.objects[0].translation_error == doctest::Approx(0.085).epsilon(1e-9));
  CHECK(r.objects[0].rotation_error == doctest::Approx(6.33).epsilon(1e-9));
  CHECK(r.objects[0].scale_error == doctest::Approx(0.2 / 3.0));
}

TEST_CASE("shape deviation is symmetric and separates different models") {
  const CadDatabase db = database_from_models(procedural_models(2, 1, 3));
  const EvaluateOptions opt{3000, 0};
  const double ab = shape_deviation(db, "chair_000", Vec3::Ones(), "table_000", Vec3::Ones(), opt);
  const double ba = shape_deviation(db, "table_000", Vec3::Ones(), "chair_000", Vec3::Ones(), opt);
  CHECK(ab == doctest::Approx(ba));
  CHECK(ab > 0.01);
  CHECK(shape_deviation(db, "chair_000", Vec3::Ones(), "chair_000", Vec3::Ones(), opt) == 0.0);
}

TEST_CASE("evaluation swaps symmetrically for translation and rotation") {
  const CadDatabase db = database_from_models(procedural_models(1, 0, 1));
  Pose9 a;
  Pose9 b;
  b.translation = Vec3(0.3, 0.1, 0);
  b.rotation = axis_rotation(Axis::kX, 0.2);
  const auto ab = evaluate_annotations(annotation_with({{1, a}}, "chair_000"), annotation_with({{1, b}}, "chair_000"), db);
  const auto ba = evaluate_annotations(annotation_with({{1, b}}, "chair_000"), annotation_with({{1, a}}, "chair_000"), db);
  CHECK(ab.objects[0].translation_error == doctest::Approx(ba.objects[0].translation_error));
  CHECK(ab.objects[0].rotation_error == doctest::Approx(ba.objects[0].rotation_error));
}

TEST_CASE("unmatched ids and no overlap") {
  const CadDatabase db = database_from_models(procedural_models(1, 0, 1));
  const SceneAnnotation pred = annotation_with({{1, Pose9{}}, {2, Pose9{}}}, "chair_000");
  SceneAnnotation ref = annotation_with({{2, Pose9{}}, {3, Pose9{}}}, "chair_000");
  const DeviationReport r = evaluate_annotations(pred, ref, db);
  CHECK(r.objects.size() == 1);
  CHECK(r.unmatched_pred == std::vector<int>{1});
  CHECK(r.unmatched_ref == std::vector<int>{3});
  const SceneAnnotation disjoint = annotation_with({{7, Pose9{}}}, "chair_000");
  try {
    (void)evaluate_annotations(pred, disjoint, db);
    FAIL("expected NoOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoOverlap);
  }
  SceneAnnotation unknown = ref;
  unknown.objects[0].model_id = "nope";
  CHECK_THROWS_AS(evaluate_annotations(pred, unknown, db), Error);
}

TEST_CASE("histogram bins by nearest-rank p99") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const Histogram h = make_histogram("x", v);
  CHECK(h.upper == 99.0);
  CHECK(h.counts.size() == 30);
  std::size_t sum = h.overflow;
  for (auto c : h.counts) sum += c;
  CHECK(sum == 100);
  CHECK(h.overflow == 1);
  CHECK(h.counts.back() >= 1);  // 99 lands in the last bin
  const Histogram z = make_histogram("z", {0.0, 0.0, 0.0});
  CHECK(z.counts[0] == 3);
  CHECK(z.overflow == 0);
}

TEST_CASE("report files are written") {
  const CadDatabase db = database_from_models(procedural_models(1, 0, 1));
  const SceneAnnotation a = annotation_with({{1, Pose9{}}}, "chair_000");
  const testutil::TempDir dir("report");
  write_report(evaluate_annotations(a, a, db, {1000, 0}), dir.path());
  CHECK(std::filesystem::exists(dir.path() / "report.json"));
  CHECK(std::filesystem::exists(dir.path() / "hist_translation.png"));
  const json j = report_to_json(evaluate_annotations(a, a, db, {1000, 0}));
  CHECK(j.contains("objects"));
}
