#include "scancad/annotation_io.hpp"

#include "scancad/io.hpp"

namespace scancad {

namespace {

json breakdown_to_json(const ObjectiveBreakdown& b) {
  return json{{"l_dpt", b.l_dpt}, {"l_sil", b.l_sil}, {"l_cd", b.l_cd}, {"total", b.total}};
}

ObjectiveBreakdown breakdown_from_json(const json& j, const std::string& what) {
  return {require_field<double>(j, "l_dpt", what), require_field<double>(j, "l_sil", what),
          require_field<double>(j, "l_cd", what), require_field<double>(j, "total", what)};
}

}  // namespace

json annotation_to_json(const SceneAnnotation& a) {
  json objects = json::array();
  for (const auto& r : a.objects) {
    json o{{"object_id", r.object_id}, {"class", r.class_label}, {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) {
      o["error"] = r.error;
    } else {
      o["model_id"] = r.model_id;
      o["pose"] = pose_to_json(r.pose);
    }
    o["cluster_id"] = r.cluster_id ? json(*r.cluster_id) : json(nullptr);
    o["objective"] = r.breakdown ? breakdown_to_json(*r.breakdown) : json(nullptr);
    json top = json::array();
    for (const auto& c : r.top_k) {
      top.push_back({{"model_id", c.model_id}, {"pose", pose_to_json(c.pose)}, {"objective", breakdown_to_json(c.breakdown)}});
    }
    o["top_k"] = std::move(top);
    objects.push_back(std::move(o));
  }
  json clusters = json::array();
  for (const auto& c : a.clusters) {
    clusters.push_back({{"cluster_id", c.cluster_id}, {"members", c.members}, {"model_id", c.model_id}});
  }
  return json{{"scene_id", a.scene_id},
              {"weight_preset", a.weight_preset},
              {"weights",
               {{"lambda_m", a.weights.lambda_m},
                {"lambda_s", a.weights.lambda_s},
                {"lambda_sil", a.weights.lambda_sil},
                {"lambda_cd", a.weights.lambda_cd}}},
              {"objects", std::move(objects)},
              {"clusters", std::move(clusters)}};
}

SceneAnnotation annotation_from_json(const json& j) {
  const std::string what = "annotation";
  SceneAnnotation a;
  a.scene_id = require_field<std::string>(j, "scene_id", what);
  a.weight_preset = j.value("weight_preset", std::string("custom"));
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    a.weights = {require_field<double>(w, "lambda_m", what), require_field<double>(w, "lambda_s", what),
                 require_field<double>(w, "lambda_sil", what), require_field<double>(w, "lambda_cd", what)};
  }
  const json objects = require_field<json>(j, "objects", what);
  if (!objects.is_array()) throw Error(ErrorCode::kManifestInvalid, what + ": objects must be an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const json& o = objects[i];
    const std::string ow = what + ".objects[" + std::to_string(i) + "]";
    RetrievalResult r;
    r.object_id = require_field<int>(o, "object_id", ow);
    r.class_label = o.value("class", std::string());
    r.ok = o.value("status", std::string("ok")) == "ok";
    if (r.ok) {
      r.model_id = require_field<std::string>(o, "model_id", ow);
      r.pose = pose_from_json(require_field<json>(o, "pose", ow), ow + ".pose");
    } else {
      r.error = o.value("error", std::string());
    }
    if (o.contains("cluster_id") && !o.at("cluster_id").is_null()) r.cluster_id = require_field<int>(o, "cluster_id", ow);
    if (o.contains("objective") && !o.at("objective").is_null()) r.breakdown = breakdown_from_json(o.at("objective"), ow);
    if (o.contains("top_k")) {
      for (const json& c : o.at("top_k")) {
        r.top_k.push_back({require_field<std::string>(c, "model_id", ow),
                           pose_from_json(require_field<json>(c, "pose", ow), ow + ".top_k.pose"),
                           breakdown_from_json(require_field<json>(c, "objective", ow), ow)});
      }
    }
    a.objects.push_back(std::move(r));
  }
  if (j.contains("clusters")) {
    for (const json& c : j.at("clusters")) {
      a.clusters.push_back({require_field<int>(c, "cluster_id", what), require_field<std::vector<int>>(c, "members", what),
                            require_field<std::string>(c, "model_id", what)});
    }
  }
  return a;
}

void save_annotation(const std::filesystem::path& path, const SceneAnnotation& annotation) {
  write_file_atomic(path, annotation_to_json(annotation).dump(2) + "\n");
}

SceneAnnotation load_annotation(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kManifestInvalid, "annotation " + path.string() + " not found");
  return annotation_from_json(parse_json(read_text_file(path), path.string()));
}

}  // namespace scancad
