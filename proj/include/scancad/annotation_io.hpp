#pragma once

#include <filesystem>

#include "scancad/json_util.hpp"
#include "scancad/pipeline.hpp"

namespace scancad {

// Scene annotation document:
// {
//   "scene_id": str, "weight_preset": str,
//   "weights": {"lambda_m", "lambda_s", "lambda_sil", "lambda_cd"},
//   "objects": [{
//     "object_id": int, "class": str, "status": "ok" | "failed", "error": str (failed only),
//     "model_id": str, "pose": {"translation", "rotation_wxyz", "scale"},
//     "cluster_id": int | null,
//     "objective": {"l_dpt", "l_sil", "l_cd", "total"} | null,
//     "top_k": [{"model_id", "pose", "objective"}]
//   }],
//   "clusters": [{"cluster_id": int, "members": [int], "model_id": str}]
// }
json annotation_to_json(const SceneAnnotation& annotation);
SceneAnnotation annotation_from_json(const json& j);

void save_annotation(const std::filesystem::path& path, const SceneAnnotation& annotation);
SceneAnnotation load_annotation(const std::filesystem::path& path);

}  // namespace scancad
