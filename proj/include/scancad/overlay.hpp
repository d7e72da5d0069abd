#pragma once

#include <filesystem>
#include <vector>

#include "scancad/cad_db.hpp"
#include "scancad/io.hpp"
#include "scancad/pipeline.hpp"
#include "scancad/scene.hpp"

namespace scancad {

// The scan with every annotated object's reconstruction replaced by its
// retrieved CAD model. Failed objects are left in place.
struct ComposedScene {
  TriMesh background;              // scene mesh minus the replaced objects
  std::vector<TriMesh> cad_meshes;  // posed into world coordinates
};

ComposedScene compose_scene(const RgbdScan& scan, const SceneAnnotation& annotation, const CadDatabase& db,
                            double segmentation_margin = 0.02);

struct FrameOverlay {
  DepthMap composed;   // background fused with the CAD models
  Mask silhouettes;    // visible CAD pixels
  Mask outline;        // silhouette pixels with a 4-neighbour outside it
};

FrameOverlay render_overlay(const ComposedScene& scene, const Camera& camera);

Mask mask_outline(const Mask& mask);

// Gray depth (near = bright) with the outline drawn white on black borders.
Image8 outline_image(const DepthMap& depth, const Mask& outline);

// Per frame index: sensor_NNNN.png, composed_NNNN.png (16-bit mm),
// silhouette_NNNN.png and outline_NNNN.png. An empty `frames` selects all.
void write_overlays(const RgbdScan& scan, const SceneAnnotation& annotation, const CadDatabase& db,
                    const std::filesystem::path& dir, const std::vector<std::size_t>& frames = {});

}  // namespace scancad
