#include <random>

#include <benchmark/benchmark.h>

#include "scancad/chamfer.hpp"
#include "scancad/pipeline.hpp"
#include "scancad/raster.hpp"
#include "scancad/synth.hpp"

using namespace scancad;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(gen), u(gen), u(gen));
  return c;
}

void BM_ChamferKdTree(benchmark::State& state) {
  const PointCloud p = random_cloud(state.range(0), 1), q = random_cloud(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_one_way(p, q));
}
BENCHMARK(BM_ChamferKdTree)->Arg(1000)->Arg(10000);

void BM_ChamferBrute(benchmark::State& state) {
  const PointCloud p = random_cloud(state.range(0), 1), q = random_cloud(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::chamfer_one_way_brute(p, q));
}
BENCHMARK(BM_ChamferBrute)->Arg(1000)->Arg(10000);

struct RasterFixture {
  std::vector<ProceduralModel> models = procedural_models(2, 1, 3);
  Camera camera = look_at({130.0, 130.0, 80.0, 60.0, 160, 120}, Vec3(0.0, 2.5, 1.6), Vec3(0.0, 0.0, 0.4));
};

void BM_RenderBanded(benchmark::State& state) {
  const RasterFixture f;
  const PosedMesh meshes[] = {PosedMesh(f.models[0].mesh)};
  for (auto _ : state) benchmark::DoNotOptimize(render_depth(meshes, f.camera));
}
BENCHMARK(BM_RenderBanded);

void BM_RenderNaive(benchmark::State& state) {
  const RasterFixture f;
  const PosedMesh meshes[] = {PosedMesh(f.models[0].mesh)};
  for (auto _ : state) benchmark::DoNotOptimize(reference::render_depth_naive(meshes, f.camera));
}
BENCHMARK(BM_RenderNaive);

struct RetrievalFixture {
  CadDatabase db = database_from_models(procedural_models(20, 0, 4));
  SyntheticScene scene = generate_scene(floor_scene({{"chair_003", "chair"}}, db, 4), db);
  PipelineConfig config;
  ObjectTask task = prepare_object(scene.scan, scene.scan.annotations[0], db, config);
};

void BM_TopKParallel(benchmark::State& state) {
  const RetrievalFixture f;
  const auto& ids = f.db.candidates_for_class("chair");
  for (auto _ : state)
    benchmark::DoNotOptimize(retrieve_top_k(f.task.cache, *f.task.annotation.obb, ids, f.db, f.config, 3));
}
BENCHMARK(BM_TopKParallel)->Unit(benchmark::kMillisecond);

void BM_TopKSerial(benchmark::State& state) {
  const RetrievalFixture f;
  const auto& ids = f.db.candidates_for_class("chair");
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::retrieve_top_k_serial(f.task.cache, *f.task.annotation.obb, ids, f.db, f.config, 3));
}
BENCHMARK(BM_TopKSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
