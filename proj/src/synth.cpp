#include "scancad/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "scancad/annotation_io.hpp"
#include "scancad/error.hpp"
#include "scancad/io.hpp"
#include "scancad/sampling.hpp"

namespace scancad {

namespace fs = std::filesystem;

TriMesh box_mesh(const Vec3& min, const Vec3& max, double spacing) {
  if (!(spacing > 0.0) || !((max - min).array() > 0.0).all()) {
    throw Error(ErrorCode::kInvalidArgument, "box_mesh needs positive extents and spacing");
  }
  TriMesh mesh;
  const Vec3 ext = max - min;
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) n[k] = std::max(1, static_cast<int>(std::ceil(ext[k] / spacing - 1e-9)));
  // One grid per side: normal axis a, in-plane axes (b, c) ordered so the
  // faces wind outward.
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
      for (int j = 0; j <= n[c]; ++j) {
        for (int i = 0; i <= n[b]; ++i) {
          Vec3 p;
          p[a] = side == 0 ? min[a] : max[a];
          p[b] = min[b] + ext[b] * i / n[b];
          p[c] = min[c] + ext[c] * j / n[c];
          mesh.vertices.push_back(p);
        }
      }
      const auto idx = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (n[b] + 1) + i); };
      for (int j = 0; j < n[c]; ++j) {
        for (int i = 0; i < n[b]; ++i) {
          const std::uint32_t v00 = idx(i, j), v10 = idx(i + 1, j), v01 = idx(i, j + 1), v11 = idx(i + 1, j + 1);
          if (side == 1) {
            mesh.faces.push_back({v00, v10, v11});
            mesh.faces.push_back({v00, v11, v01});
          } else {
            mesh.faces.push_back({v00, v11, v10});
            mesh.faces.push_back({v00, v01, v11});
          }
        }
      }
    }
  }
  return mesh;
}

TriMesh merge_meshes(std::span<const TriMesh> parts) {
  TriMesh out;
  bool labels = !parts.empty();
  for (const auto& p : parts) labels = labels && p.has_instance_ids();
  for (const auto& p : parts) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& f : p.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    if (labels) out.instance_ids.insert(out.instance_ids.end(), p.instance_ids.begin(), p.instance_ids.end());
  }
  return out;
}

namespace {

class Builder {
 public:
  explicit Builder(double spacing) : spacing_(spacing) {}
  void box(const Vec3& min, const Vec3& max) { parts_.push_back(box_mesh(min, max, spacing_)); }
  TriMesh build() const { return merge_meshes(parts_); }

 private:
  double spacing_;
  std::vector<TriMesh> parts_;
};

struct Rng {
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen); }
  std::mt19937_64 gen;
};

}  // namespace

TriMesh make_chair(std::uint64_t seed, double spacing) {
  Rng rng(mix_seed(seed, 0x63686169));
  const double w = rng.uniform(0.40, 0.62);
  const double d = rng.uniform(0.40, 0.58);
  const double h = rng.uniform(0.38, 0.52);   // seat top
  const double ts = rng.uniform(0.03, 0.08);  // seat thickness
  const double lt = rng.uniform(0.03, 0.06);  // leg thickness
  const double bh = rng.uniform(0.28, 0.60);  // back height above seat
  const double bt = rng.uniform(0.03, 0.08);
  const int base = rng.pick(3);   // 0 four legs, 1 four legs + stretchers, 2 pedestal
  const int back = rng.pick(3);   // 0 solid, 1 slats, 2 posts + top rail
  const bool arms = rng.chance(0.35);
  const double hw = w / 2, hd = d / 2;

  Builder b(spacing);
  b.box({-hw, -hd, h - ts}, {hw, hd, h});
  if (base == 2) {
    const double pr = rng.uniform(0.03, 0.06);
    b.box({-pr, -pr, 0.06}, {pr, pr, h - ts});
    const double fr = rng.uniform(0.18, 0.28);
    b.box({-fr, -0.03, 0.0}, {fr, 0.03, 0.06});
    b.box({-0.03, -fr, 0.0}, {0.03, fr, 0.06});
  } else {
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const double x0 = sx < 0 ? -hw : hw - lt;
        const double y0 = sy < 0 ? -hd : hd - lt;
        b.box({x0, y0, 0.0}, {x0 + lt, y0 + lt, h - ts});
      }
    }
    if (base == 1) {
      const double z = rng.uniform(0.10, 0.22);
      b.box({-hw + lt, -hd, z}, {hw - lt, -hd + lt, z + lt});
      b.box({-hw + lt, hd - lt, z}, {hw - lt, hd, z + lt});
      b.box({-hw, -hd + lt, z}, {-hw + lt, hd - lt, z + lt});
      b.box({hw - lt, -hd + lt, z}, {hw, hd - lt, z + lt});
    }
  }
  // Back along +y.
  const double y1 = hd;
  const double y0 = hd - bt;
  if (back == 0) {
    b.box({-hw, y0, h}, {hw, y1, h + bh});
  } else {
    const double pt = std::max(lt, 0.035);
    b.box({-hw, y0, h}, {-hw + pt, y1, h + bh});
    b.box({hw - pt, y0, h}, {hw, y1, h + bh});
    const double rail = rng.uniform(0.06, 0.14);
    b.box({-hw + pt, y0, h + bh - rail}, {hw - pt, y1, h + bh});
    if (back == 1) {
      const int slats = 2 + rng.pick(3);
      const double inner = w - 2 * pt;
      const double sw = std::min(0.04, inner / (2 * slats + 1));
      for (int s = 0; s < slats; ++s) {
        const double cx = -hw + pt + inner * (s + 1) / (slats + 1);
        b.box({cx - sw / 2, y0, h}, {cx + sw / 2, y1, h + bh - rail});
      }
    }
  }
  if (arms) {
    const double ah = rng.uniform(0.18, 0.26);
    const double at = 0.05;
    for (int sx : {-1, 1}) {
      const double x0 = sx < 0 ? -hw - at : hw;
      b.box({x0, -hd, h + ah - 0.04}, {x0 + at, y0, h + ah});
      b.box({x0, -hd, h - ts}, {x0 + at, -hd + 0.04, h + ah - 0.04});
    }
  }
  return b.build();
}

TriMesh make_table(std::uint64_t seed, double spacing) {
  Rng rng(mix_seed(seed, 0x7461626c));
  const double w = rng.uniform(0.8, 1.6);
  const double d = rng.uniform(0.6, 1.0);
  const double h = rng.uniform(0.68, 0.78);
  const double tt = rng.uniform(0.03, 0.07);
  const double lt = rng.uniform(0.04, 0.09);
  const int base = rng.pick(3);  // 0 legs, 1 legs + apron, 2 twin pedestals
  const bool shelf = rng.chance(0.3);
  const double hw = w / 2, hd = d / 2;
  const double inset = rng.uniform(0.0, 0.08);

  Builder b(spacing);
  b.box({-hw, -hd, h - tt}, {hw, hd, h});
  if (base == 2) {
    for (int sx : {-1, 1}) {
      const double cx = sx * (hw - 0.2);
      b.box({cx - 0.04, -0.04, 0.05}, {cx + 0.04, 0.04, h - tt});
      b.box({cx - 0.05, -hd + 0.05, 0.0}, {cx + 0.05, hd - 0.05, 0.05});
    }
  } else {
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const double x0 = sx < 0 ? -hw + inset : hw - inset - lt;
        const double y0 = sy < 0 ? -hd + inset : hd - inset - lt;
        b.box({x0, y0, 0.0}, {x0 + lt, y0 + lt, h - tt});
      }
    }
    if (base == 1) {
      const double ah = rng.uniform(0.06, 0.12);
      b.box({-hw + inset + lt, -hd + inset, h - tt - ah}, {hw - inset - lt, -hd + inset + 0.02, h - tt});
      b.box({-hw + inset + lt, hd - inset - 0.02, h - tt - ah}, {hw - inset - lt, hd - inset, h - tt});
    }
  }
  if (shelf) {
    const double z = rng.uniform(0.12, 0.25);
    b.box({-hw + inset + lt, -hd + inset + lt, z}, {hw - inset - lt, hd - inset - lt, z + 0.025});
  }
  return b.build();
}

std::vector<ProceduralModel> procedural_models(int n_chairs, int n_tables, std::uint64_t seed, double spacing) {
  std::vector<ProceduralModel> out;
  char id[32];
  for (int i = 0; i < n_chairs; ++i) {
    std::snprintf(id, sizeof(id), "chair_%03d", i);
    out.push_back({id, "chair", make_chair(mix_seed(seed, static_cast<std::uint64_t>(i)), spacing)});
  }
  for (int i = 0; i < n_tables; ++i) {
    std::snprintf(id, sizeof(id), "table_%03d", i);
    out.push_back({id, "table", make_table(mix_seed(seed, 1000003u + static_cast<std::uint64_t>(i)), spacing)});
  }
  return out;
}

CadDatabase database_from_models(const std::vector<ProceduralModel>& models) {
  CadDatabase db;
  for (const auto& m : models) db.add_model(m.id, m.category, m.mesh);
  return db;
}

fs::path write_database(const std::vector<ProceduralModel>& models, const fs::path& dir) {
  fs::create_directories(dir / "meshes");
  std::string lines;
  for (const auto& m : models) {
    const std::string rel = "meshes/" + m.id + ".ply";
    write_ply(dir / rel, m.mesh);
    lines += json{{"id", m.id}, {"category", m.category}, {"mesh_path", rel}, {"up_axis", "z"}}.dump() + "\n";
  }
  write_file_atomic(dir / "db.jsonl", lines);
  return dir / "db.jsonl";
}

Camera look_at(const Intrinsics& k, const Vec3& eye, const Vec3& target) {
  const Vec3 f = (target - eye).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(f.dot(up)) > 0.999) up = Vec3::UnitY();
  const Vec3 x = f.cross(up).normalized();
  const Vec3 y = f.cross(x);
  Mat4 c2w = Mat4::Identity();
  c2w.block<3, 1>(0, 0) = x;
  c2w.block<3, 1>(0, 1) = y;
  c2w.block<3, 1>(0, 2) = f;
  c2w.block<3, 1>(0, 3) = eye;
  return Camera::from_camera_to_world(k, c2w);
}

void SyntheticSceneSpec::validate(const CadDatabase& db) const {
  if (orbit.count < 1) throw Error(ErrorCode::kInvalidArgument, "synthetic scene needs at least one camera");
  if (!(room.array() > 0.0).all()) throw Error(ErrorCode::kInvalidArgument, "room dimensions must be positive");
  if (!(noise_std >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_std must be >= 0");
  Camera probe;
  probe.intrinsics = orbit.intrinsics;
  probe.validate();
  const Vec3 lo(-room.x() / 2, -room.y() / 2, 0.0);
  const Vec3 hi(room.x() / 2, room.y() / 2, room.z());
  constexpr double kTol = 1e-9;
  for (const auto& o : objects) {
    if (o.object_id < 0) throw Error(ErrorCode::kInvalidArgument, "object ids must be >= 0");
    o.pose.validate();
    const CadModel& m = db.model(o.model_id);
    const Obb box{o.pose.translation, o.pose.scale.cwiseProduct(m.half_extents()), o.pose.rotation};
    for (const Vec3& c : box.corners()) {
      if (((c - lo).array() < -kTol).any() || ((hi - c).array() < -kTol).any()) {
        throw Error(ErrorCode::kInvalidArgument, "object " + std::to_string(o.object_id) + " leaves the room shell");
      }
    }
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (objects[i].object_id == objects[j].object_id) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate object id " + std::to_string(objects[i].object_id));
      }
    }
  }
}

json synth_spec_to_json(const SyntheticSceneSpec& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"object_id", o.object_id}, {"model_id", o.model_id}, {"class", o.class_label},
                       {"pose", pose_to_json(o.pose)}});
  }
  return json{{"scene_id", s.scene_id},
              {"room", vec3_to_json(s.room)},
              {"objects", std::move(objects)},
              {"orbit",
               {{"count", s.orbit.count},
                {"radius", s.orbit.radius},
                {"height", s.orbit.height},
                {"target", vec3_to_json(s.orbit.target)},
                {"phase", s.orbit.phase},
                {"intrinsics", intrinsics_to_json(s.orbit.intrinsics)}}},
              {"noise_std", s.noise_std},
              {"seed", s.seed},
              {"supply_obb", s.supply_obb}};
}

SyntheticSceneSpec synth_spec_from_json(const json& j) {
  const std::string what = "synthetic spec";
  SyntheticSceneSpec s;
  if (!j.is_object()) throw Error(ErrorCode::kManifestInvalid, what + ": expected an object");
  s.scene_id = j.value("scene_id", s.scene_id);
  if (j.contains("room")) s.room = vec3_from_json(j.at("room"), what + ".room");
  for (const json& o : require_field<json>(j, "objects", what)) {
    s.objects.push_back({require_field<int>(o, "object_id", what), require_field<std::string>(o, "model_id", what),
                         require_field<std::string>(o, "class", what),
                         pose_from_json(require_field<json>(o, "pose", what), what + ".pose")});
  }
  if (j.contains("orbit")) {
    const json& o = j.at("orbit");
    s.orbit.count = o.value("count", s.orbit.count);
    s.orbit.radius = o.value("radius", s.orbit.radius);
    s.orbit.height = o.value("height", s.orbit.height);
    if (o.contains("target")) s.orbit.target = vec3_from_json(o.at("target"), what + ".orbit.target");
    s.orbit.phase = o.value("phase", s.orbit.phase);
    if (o.contains("intrinsics")) s.orbit.intrinsics = intrinsics_from_json(o.at("intrinsics"), what + ".orbit.intrinsics");
  }
  s.noise_std = j.value("noise_std", s.noise_std);
  s.seed = j.value("seed", s.seed);
  s.supply_obb = j.value("supply_obb", s.supply_obb);
  return s;
}

SyntheticScene generate_scene(const SyntheticSceneSpec& spec, const CadDatabase& db) {
  spec.validate(db);
  SyntheticScene out;
  RgbdScan& scan = out.scan;
  scan.scene_id = spec.scene_id;
  scan.gravity_axis = Axis::kZ;

  std::vector<TriMesh> parts;
  TriMesh shell = box_mesh(Vec3(-spec.room.x() / 2, -spec.room.y() / 2, 0.0),
                           Vec3(spec.room.x() / 2, spec.room.y() / 2, spec.room.z()), 1.0);
  shell.instance_ids.assign(shell.vertices.size(), -1);
  parts.push_back(std::move(shell));
  for (const auto& o : spec.objects) {
    const CadModel& m = db.model(o.model_id);
    TriMesh posed = m.mesh;
    for (auto& v : posed.vertices) v = o.pose.apply(v);
    posed.instance_ids.assign(posed.vertices.size(), o.object_id);
    parts.push_back(std::move(posed));
  }
  scan.scene_mesh = merge_meshes(parts);

  const PosedMesh scene[] = {PosedMesh(scan.scene_mesh)};
  for (int i = 0; i < spec.orbit.count; ++i) {
    const double a = spec.orbit.phase + 2.0 * std::numbers::pi * i / spec.orbit.count;
    const Vec3 eye(spec.orbit.target.x() + spec.orbit.radius * std::cos(a),
                   spec.orbit.target.y() + spec.orbit.radius * std::sin(a), spec.orbit.height);
    ScanFrame frame;
    frame.camera = look_at(spec.orbit.intrinsics, eye, spec.orbit.target);
    DepthMap depth = render_depth(scene, frame.camera);
    if (spec.noise_std > 0.0) {
      std::mt19937_64 gen(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
      std::normal_distribution<double> noise(0.0, spec.noise_std);
      for (double& z : depth.values) {
        if (DepthMap::is_valid(z)) z += noise(gen);
      }
    }
    frame.depth_scale = 0.001;
    frame.depth = dequantize_depth(quantize_depth(depth, frame.depth_scale), frame.depth_scale);
    char name[32];
    std::snprintf(name, sizeof(name), "depth/%04d.png", i);
    frame.depth_file = name;
    scan.frames.push_back(std::move(frame));
  }

  out.ground_truth.scene_id = spec.scene_id;
  out.ground_truth.weight_preset = "ground_truth";
  for (const auto& o : spec.objects) {
    const CadModel& m = db.model(o.model_id);
    ObjectAnnotation ann;
    ann.object_id = o.object_id;
    ann.class_label = o.class_label;
    ann.instance_id = o.object_id;
    ann.segmentation = vertices_with_instance(scan.scene_mesh, o.object_id);
    ann.segmentation_supplied = true;
    if (spec.supply_obb) {
      ann.obb = Obb{o.pose.translation, o.pose.scale.cwiseProduct(m.half_extents()), o.pose.rotation};
      ann.obb_supplied = true;
    }
    scan.annotations.push_back(std::move(ann));

    RetrievalResult r;
    r.object_id = o.object_id;
    r.class_label = o.class_label;
    r.model_id = o.model_id;
    r.pose = o.pose;
    out.ground_truth.objects.push_back(std::move(r));
  }
  return out;
}

void write_synthetic_scene(const SyntheticScene& scene, const fs::path& dir) {
  save_scan(scene.scan, dir);
  save_annotation(dir / "ground_truth.json", scene.ground_truth);
}

SyntheticSceneSpec floor_scene(const std::vector<std::pair<std::string, std::string>>& models_and_classes,
                               const CadDatabase& db, std::uint64_t seed) {
  SyntheticSceneSpec spec;
  spec.seed = seed;
  spec.orbit.phase = 0.3;
  Rng rng(mix_seed(seed, 0x666c6f6f72));
  // 3 x 3 slots 1.3 m apart, visited in a seed-dependent order.
  std::vector<int> slots{0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::shuffle(slots.begin(), slots.end(), rng.gen);
  if (models_and_classes.size() > slots.size()) {
    throw Error(ErrorCode::kInvalidArgument, "floor_scene places at most 9 objects");
  }
  for (std::size_t i = 0; i < models_and_classes.size(); ++i) {
    const auto& [model_id, label] = models_and_classes[i];
    const CadModel& m = db.model(model_id);
    PlacedObject o;
    o.object_id = static_cast<int>(i) + 1;
    o.model_id = model_id;
    o.class_label = label;
    o.pose.scale = Vec3(rng.uniform(0.9, 1.1), rng.uniform(0.9, 1.1), rng.uniform(0.9, 1.1));
    o.pose.rotation = axis_rotation(Axis::kZ, rng.uniform(0.0, 2.0 * std::numbers::pi));
    const int slot = slots[i];
    const double x = 1.3 * (slot % 3 - 1) + rng.uniform(-0.1, 0.1);
    const double y = 1.3 * (slot / 3 - 1) + rng.uniform(-0.1, 0.1);
    o.pose.translation = Vec3(x, y, o.pose.scale.z() * m.half_extents().z());
    spec.objects.push_back(std::move(o));
  }
  return spec;
}

}  // namespace scancad
