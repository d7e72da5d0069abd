#include "scancad/overlay.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "scancad/error.hpp"

namespace scancad {

ComposedScene compose_scene(const RgbdScan& scan, const SceneAnnotation& annotation, const CadDatabase& db,
                            double segmentation_margin) {
  std::map<int, const ObjectAnnotation*> by_id;
  for (const auto& a : scan.annotations) by_id[a.object_id] = &a;
  std::vector<std::uint32_t> removed;
  ComposedScene out;
  for (const auto& r : annotation.objects) {
    if (!r.ok) continue;
    const auto it = by_id.find(r.object_id);
    if (it != by_id.end()) {
      const ObjectAnnotation ann = derive_missing_supervision(scan, *it->second, segmentation_margin);
      removed.insert(removed.end(), ann.segmentation->begin(), ann.segmentation->end());
    }
    TriMesh mesh = db.model(r.model_id).mesh;
    for (auto& v : mesh.vertices) v = r.pose.apply(v);
    out.cad_meshes.push_back(std::move(mesh));
  }
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
  out.background = remove_vertices(scan.scene_mesh, removed);
  return out;
}

Mask mask_outline(const Mask& mask) {
  Mask out(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      const bool border = u == 0 || v == 0 || u == mask.width - 1 || v == mask.height - 1 || !mask.at(u - 1, v) ||
                          !mask.at(u + 1, v) || !mask.at(u, v - 1) || !mask.at(u, v + 1);
      out.values[static_cast<std::size_t>(v) * mask.width + u] = border ? 1 : 0;
    }
  }
  return out;
}

FrameOverlay render_overlay(const ComposedScene& scene, const Camera& camera) {
  const PosedMesh background[] = {PosedMesh(scene.background)};
  std::vector<PosedMesh> cads;
  for (const auto& m : scene.cad_meshes) cads.emplace_back(m);
  const DepthMap bg = render_depth(background, camera);
  const DepthMap cad = cads.empty() ? DepthMap(camera.intrinsics.width, camera.intrinsics.height)
                                    : render_depth(cads, camera);
  FrameOverlay out;
  out.composed = fuse_depth(bg, cad);
  out.silhouettes = visible_mask(cad, bg);
  out.outline = mask_outline(out.silhouettes);
  return out;
}

Image8 outline_image(const DepthMap& depth, const Mask& outline) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (double z : depth.values) {
    if (!DepthMap::is_valid(z)) continue;
    lo = any ? std::min(lo, z) : z;
    hi = any ? std::max(hi, z) : z;
    any = true;
  }
  Image8 img{depth.width, depth.height, std::vector<std::uint8_t>(depth.values.size(), 0)};
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (outline.values[i]) {
      img.pixels[i] = 255;
    } else if (DepthMap::is_valid(depth.values[i])) {
      const double t = hi > lo ? (depth.values[i] - lo) / (hi - lo) : 0.0;
      img.pixels[i] = static_cast<std::uint8_t>(200 - std::lround(160.0 * t));
    }
  }
  return img;
}

void write_overlays(const RgbdScan& scan, const SceneAnnotation& annotation, const CadDatabase& db,
                    const std::filesystem::path& dir, const std::vector<std::size_t>& frames) {
  std::vector<std::size_t> selected = frames;
  if (selected.empty()) {
    for (std::size_t i = 0; i < scan.frames.size(); ++i) selected.push_back(i);
  }
  const ComposedScene composed = compose_scene(scan, annotation, db);
  std::filesystem::create_directories(dir);
  for (std::size_t idx : selected) {
    if (idx >= scan.frames.size()) throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(idx) + " out of range");
    const ScanFrame& f = scan.frames[idx];
    const FrameOverlay ov = render_overlay(composed, f.camera);
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_%04zu.png", idx);
    write_depth_png(dir / (std::string("sensor") + suffix), f.depth, f.depth_scale);
    write_depth_png(dir / (std::string("composed") + suffix), ov.composed, f.depth_scale);
    write_mask_png(dir / (std::string("silhouette") + suffix), ov.silhouettes);
    write_png8(dir / (std::string("outline") + suffix), outline_image(ov.composed, ov.outline));
  }
}

}  // namespace scancad
