#include <doctest.h>

#include <fstream>

#include "scancad/error.hpp"
#include "scancad/io.hpp"
#include "scancad/synth.hpp"
#include "test_util.hpp"

using namespace scancad;

TEST_CASE("binary PLY round trip keeps vertices, faces and instance ids") {
  testutil::TempDir dir("ply");
  TriMesh m = box_mesh(Vec3(0, 0, 0), Vec3(1, 2, 3), 0.5);
  m.instance_ids.assign(m.vertices.size(), 4);
  m.instance_ids[0] = -1;
  write_ply(dir.path() / "m.ply", m);
  const TriMesh r = read_mesh(dir.path() / "m.ply");
  CHECK(r.vertices == m.vertices);
  CHECK(r.faces == m.faces);
  CHECK(r.instance_ids == m.instance_ids);
}

TEST_CASE("ASCII PLY with quads and extra properties") {
  testutil::TempDir dir("ply_ascii");
  std::ofstream(dir.path() / "q.ply") << "ply\nformat ascii 1.0\ncomment test\n"
                                          "element vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
                                          "property uchar red\n"
                                          "element face 1\nproperty list uchar int vertex_indices\n"
                                          "end_header\n0 0 0 255\n1 0 0 0\n1 1 0 0\n0 1 0 0\n4 0 1 2 3\n";
  const TriMesh m = read_mesh(dir.path() / "q.ply");
  CHECK(m.vertices.size() == 4);
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[1] == Face{0, 2, 3});
  CHECK(m.surface_area() == doctest::Approx(1.0));
}

TEST_CASE("OBJ faces with texture/normal indices and negative indices") {
  testutil::TempDir dir("obj");
  std::ofstream(dir.path() / "m.obj") << "# cube corner\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\n"
                                          "f 1//1 2//1 3//1\nf -4/1/1 -2/1/1 -1/1/1\n";
  const TriMesh m = read_mesh(dir.path() / "m.obj");
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[1] == Face{0, 2, 3});
}

TEST_CASE("malformed meshes raise MeshParseError") {
  testutil::TempDir dir("bad");
  std::ofstream(dir.path() / "bad.ply") << "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nend_header\n1\n";
  CHECK_THROWS_AS(read_mesh(dir.path() / "bad.ply"), Error);
  std::ofstream(dir.path() / "bad.obj") << "v 0 0 0\nf 1 2 3\n";
  try {
    read_mesh(dir.path() / "bad.obj");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMeshParseError);
  }
}

TEST_CASE("16-bit PNG round trip and depth quantization") {
  testutil::TempDir dir("png");
  Image16 img{5, 3, {}};
  for (int i = 0; i < 15; ++i) img.pixels.push_back(static_cast<std::uint16_t>(i * 4000 + 7));
  write_png16(dir.path() / "a.png", img);
  const Image16 r = read_png16(dir.path() / "a.png");
  CHECK(r.width == 5);
  CHECK(r.pixels == img.pixels);

  DepthMap d(4, 1);
  d.values = {0.0, 1.2344, 1.2346, 80.0};
  const DepthMap q = dequantize_depth(quantize_depth(d, 0.001), 0.001);
  CHECK(q.values[0] == 0.0);
  CHECK(q.values[1] == doctest::Approx(1.234));
  CHECK(q.values[2] == doctest::Approx(1.235));
  CHECK(q.values[3] == doctest::Approx(65.535));
}

TEST_CASE("corrupt PNG raises DepthDecodeError") {
  testutil::TempDir dir("png_bad");
  std::ofstream(dir.path() / "x.png") << "not a png";
  try {
    read_depth_png(dir.path() / "x.png", 0.001);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDepthDecodeError);
  }
}
