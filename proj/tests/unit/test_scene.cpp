#include <doctest.h>

#include <fstream>

#include "scancad/error.hpp"
#include "scancad/io.hpp"
#include "scancad/synth.hpp"
#include "test_util.hpp"

using namespace scancad;

namespace {

struct Fixture {
  CadDatabase db = database_from_models(procedural_models(2, 1, 5));
  SyntheticScene scene;

  Fixture() {
    SyntheticSceneSpec spec = floor_scene({{"chair_000", "chair"}, {"table_000", "table"}}, db, 9);
    spec.orbit.count = 6;
    scene = generate_scene(spec, db);
  }
};

}  // namespace

TEST_CASE("save_scan / load_scan round trip") {
  Fixture f;
  testutil::TempDir dir("scan");
  save_scan(f.scene.scan, dir.path());
  const RgbdScan loaded = load_scan(dir.path() / "manifest.json");
  CHECK(loaded.scene_id == f.scene.scan.scene_id);
  CHECK(loaded.frames.size() == 6);
  CHECK(loaded.scene_mesh.vertices == f.scene.scan.scene_mesh.vertices);
  CHECK(loaded.scene_mesh.instance_ids == f.scene.scan.scene_mesh.instance_ids);
  for (std::size_t i = 0; i < loaded.frames.size(); ++i) {
    CHECK(loaded.frames[i].depth.values == f.scene.scan.frames[i].depth.values);
    const Vec3 p(0.1, 0.2, 0.3);
    CHECK((loaded.frames[i].camera.to_camera(p) - f.scene.scan.frames[i].camera.to_camera(p)).norm() < 1e-12);
  }
  REQUIRE(loaded.annotations.size() == 2);
  CHECK(loaded.annotations[0].segmentation == f.scene.scan.annotations[0].segmentation);
  CHECK(loaded.annotations[1].obb->half_extents.isApprox(f.scene.scan.annotations[1].obb->half_extents));
}

TEST_CASE("load_scan reports missing assets and bad manifests") {
  Fixture f;
  testutil::TempDir dir("scan_err");
  save_scan(f.scene.scan, dir.path());
  std::filesystem::remove(dir.path() / "depth" / "0002.png");
  try {
    load_scan(dir.path() / "manifest.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingAsset);
    CHECK(std::string(e.what()).find("0002") != std::string::npos);
  }
  std::ofstream(dir.path() / "manifest.json") << "{\"scene_id\": 3}";
  try {
    load_scan(dir.path() / "manifest.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kManifestInvalid);
  }
}

TEST_CASE("select_frames spacing rules") {
  Fixture f;
  const Obb& box = *f.scene.scan.annotations[0].obb;
  const FrameSelection all = select_frames(f.scene.scan, box, 50);
  const std::size_t q = all.frame_indices.size();
  REQUIRE(q >= 4);
  const FrameSelection even = select_frames(f.scene.scan, box, 3, FrameSpacing::kEven);
  REQUIRE(even.frame_indices.size() == 3);
  CHECK(even.frame_indices.front() == all.frame_indices.front());
  CHECK(even.frame_indices.back() == all.frame_indices.back());
  CHECK(even.frame_indices[1] == all.frame_indices[(q - 1) / 2]);
  const FrameSelection one = select_frames(f.scene.scan, box, 1);
  CHECK(one.frame_indices == std::vector<std::size_t>{all.frame_indices.front()});
  const FrameSelection stride = select_frames(f.scene.scan, box, 2, FrameSpacing::kStride);
  CHECK(stride.frame_indices.front() == all.frame_indices.front());
  CHECK(stride.frame_indices.size() <= 2);

  Obb away = box;
  away.center = Vec3(0, 0, -50);
  CHECK_THROWS_AS(select_frames(f.scene.scan, away, 3), Error);
}

TEST_CASE("derive_missing_supervision fills either side") {
  Fixture f;
  ObjectAnnotation seg_only = f.scene.scan.annotations[0];
  const Obb truth = *seg_only.obb;
  seg_only.obb.reset();
  const ObjectAnnotation with_box = derive_missing_supervision(f.scene.scan, seg_only, 0.02);
  REQUIRE(with_box.obb);
  // The fitted box contains every segmented vertex.
  PointCloud seg;
  for (auto i : *seg_only.segmentation) seg.points.push_back(f.scene.scan.scene_mesh.vertices[i]);
  CHECK(points_in_obb(*with_box.obb, seg, 1e-9).size() == seg.size());
  CHECK(with_box.obb->half_extents.z() == doctest::Approx(truth.half_extents.z()));

  ObjectAnnotation box_only = f.scene.scan.annotations[0];
  box_only.segmentation.reset();
  const ObjectAnnotation with_seg = derive_missing_supervision(f.scene.scan, box_only, 1e-9);
  REQUIRE(with_seg.segmentation);
  // The object's own vertices lie on or inside its exact box, up to rounding.
  for (auto i : *f.scene.scan.annotations[0].segmentation) {
    CHECK(std::binary_search(with_seg.segmentation->begin(), with_seg.segmentation->end(), i));
  }
}

TEST_CASE("remove_object drops the object's vertices and touching faces") {
  Fixture f;
  const ObjectAnnotation& ann = f.scene.scan.annotations[0];
  const TriMesh hole = remove_object(f.scene.scan, ann);
  CHECK(hole.vertices.size() == f.scene.scan.scene_mesh.vertices.size() - ann.segmentation->size());
  for (auto id : hole.instance_ids) CHECK(id != ann.object_id);
  hole.validate();
  const PointCloud cloud = object_point_cloud(f.scene.scan, ann);
  CHECK(cloud.size() == ann.segmentation->size());
  ObjectAnnotation empty = ann;
  empty.segmentation = std::vector<std::uint32_t>{};
  CHECK_THROWS_AS(object_point_cloud(f.scene.scan, empty), Error);
}
