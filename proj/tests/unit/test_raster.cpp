#include <doctest.h>

#include "scancad/error.hpp"
#include "scancad/raster.hpp"
#include "scancad/synth.hpp"
#include "test_util.hpp"

using namespace scancad;

namespace {

Camera identity_camera(int w = 64, int h = 48, double f = 50.0) {
  Camera c;
  c.intrinsics = {f, f, w / 2.0, h / 2.0, w, h};
  return c;
}

}  // namespace

TEST_CASE("fronto-parallel plane renders its exact depth") {
  const Camera cam = identity_camera();
  const TriMesh plane = testutil::quad(-0.5, 0.5, -0.4, 0.4, 2.0);
  const PosedMesh meshes[] = {PosedMesh(plane)};
  const DepthMap d = render_depth(meshes, cam);
  std::size_t covered = 0;
  for (int v = 0; v < d.height; ++v) {
    for (int u = 0; u < d.width; ++u) {
      const Vec3 ray = cam.unproject(u, v, 2.0);
      const bool inside = std::abs(ray.x()) < 0.5 && std::abs(ray.y()) < 0.4;
      if (inside) {
        CHECK(d.at(u, v) == 2.0);
        ++covered;
      }
      if (std::abs(ray.x()) > 0.5 || std::abs(ray.y()) > 0.4) CHECK(d.at(u, v) == 0.0);
    }
  }
  CHECK(covered > 0);
}

TEST_CASE("shared edges leave no cracks") {
  const Camera cam = identity_camera(97, 83, 61.0);
  // Irregular fan around a centre point, all at z = 3.
  TriMesh fan;
  fan.vertices.push_back(Vec3(0.013, -0.021, 3.0));
  const int n = 13;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * 3.14159265358979 * i / n + 0.1 * (i % 3);
    fan.vertices.push_back(Vec3(6.0 * std::cos(a), 6.0 * std::sin(a), 3.0));
  }
  for (int i = 0; i < n; ++i) {
    fan.faces.push_back({0, static_cast<std::uint32_t>(1 + i), static_cast<std::uint32_t>(1 + (i + 1) % n)});
  }
  const PosedMesh meshes[] = {PosedMesh(fan)};
  const DepthMap d = render_depth(meshes, cam);
  CHECK(d.valid_count() == d.values.size());  // fan covers the whole view
}

TEST_CASE("z-buffer keeps the nearest surface") {
  const Camera cam = identity_camera();
  const TriMesh far = testutil::quad(-3, 3, -3, 3, 4.0);
  const TriMesh near = testutil::quad(-0.2, 0.2, -0.2, 0.2, 1.5);
  const PosedMesh order_a[] = {PosedMesh(far), PosedMesh(near)};
  const PosedMesh order_b[] = {PosedMesh(near), PosedMesh(far)};
  const DepthMap a = render_depth(order_a, cam);
  const DepthMap b = render_depth(order_b, cam);
  CHECK(a.values == b.values);
  CHECK(a.at(32, 24) == 1.5);
  CHECK(a.at(2, 2) == 4.0);
  const Mask m = render_mask(PosedMesh(far), std::span(&order_a[1], 1), cam);
  CHECK(!m.at(32, 24));
  CHECK(m.at(2, 2));
}

TEST_CASE("geometry behind the camera is clipped") {
  const Camera cam = identity_camera();
  TriMesh tri;
  tri.vertices = {{-1, -1, -1}, {1, -1, -1}, {0, 1, -1}};
  tri.faces = {{0, 1, 2}};
  const PosedMesh meshes[] = {PosedMesh(tri)};
  CHECK(render_depth(meshes, cam).valid_count() == 0);
  // A triangle crossing the camera plane is rendered only where z > 0.
  TriMesh crossing;
  crossing.vertices = {{-1, 0.1, -1}, {1, 0.1, -1}, {0, 0.1, 3}};
  crossing.faces = {{0, 1, 2}};
  const PosedMesh m2[] = {PosedMesh(crossing)};
  const DepthMap d = render_depth(m2, cam);
  for (double z : d.values) CHECK((z == 0.0 || z > 0.0));
}

TEST_CASE("banded renderer equals the naive reference") {
  std::mt19937_64 gen(21);
  const TriMesh box = box_mesh(Vec3(-0.3, -0.3, -0.3), Vec3(0.3, 0.3, 0.3), 0.15);
  Camera cam = look_at({120, 120, 80, 60, 160, 120}, Vec3(1.5, 0.4, 0.8), Vec3(0, 0, 0));
  for (int i = 0; i < 5; ++i) {
    Pose9 p;
    p.rotation = testutil::random_rotation(gen);
    p.translation = Vec3(0.1 * i, -0.05 * i, 0.0);
    const PosedMesh meshes[] = {PosedMesh(box, p)};
    CHECK(render_depth(meshes, cam).values == reference::render_depth_naive(meshes, cam).values);
  }
}

TEST_CASE("fuse_depth of split renders equals the joint render") {
  std::mt19937_64 gen(22);
  const TriMesh a = box_mesh(Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2), 0.1);
  const TriMesh b = box_mesh(Vec3(-0.3, -0.1, -0.25), Vec3(0.3, 0.1, 0.25), 0.1);
  const Camera cam = look_at({100, 100, 40, 30, 80, 60}, Vec3(1.2, -0.3, 0.6), Vec3(0, 0, 0));
  for (int i = 0; i < 5; ++i) {
    Pose9 pa, pb;
    pa.rotation = testutil::random_rotation(gen);
    pb.rotation = testutil::random_rotation(gen);
    pb.translation = Vec3(0.1, 0.05 * i, -0.05);
    const PosedMesh joint[] = {PosedMesh(a, pa), PosedMesh(b, pb)};
    const DepthMap fused = fuse_depth(render_depth(std::span(joint, 1), cam), render_depth(std::span(joint + 1, 1), cam));
    CHECK(fused.values == render_depth(joint, cam).values);
  }
}

TEST_CASE("fuse_depth and visible_mask semantics") {
  DepthMap a(3, 1), b(3, 1);
  a.values = {0.0, 2.0, 1.0};
  b.values = {0.0, 0.0, 1.0};
  const DepthMap f = fuse_depth(a, b);
  CHECK(f.values == std::vector<double>{0.0, 2.0, 1.0});
  const Mask m = visible_mask(a, b);
  CHECK(m.values == std::vector<std::uint8_t>{0, 1, 1});  // ties go to the target
  CHECK_THROWS_AS(fuse_depth(a, DepthMap(2, 1)), Error);
}

TEST_CASE("camera round trip and downsampling") {
  const Camera cam = look_at({100, 90, 40, 30, 80, 60}, Vec3(1, 2, 1.5), Vec3(0, 0, 0.5));
  const Camera back = Camera::from_camera_to_world(cam.intrinsics, cam.camera_to_world());
  const Vec3 p(0.3, -0.1, 0.7);
  CHECK((back.to_camera(p) - cam.to_camera(p)).norm() < 1e-12);
  const Camera half = cam.downsampled(2);
  CHECK(half.intrinsics.width == 40);
  CHECK(half.intrinsics.fx == 50.0);
  // The same 3D point projects to half the (pixel-edge) coordinates.
  const Vec3 pc = cam.to_camera(p);
  CHECK((half.project(pc) - 0.5 * cam.project(pc)).norm() < 1e-12);
}
