#include "scancad/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scancad/error.hpp"

namespace scancad {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  const std::size_t nf = mesh.faces.size();
  std::vector<double> cumulative(nf);
  double total = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3& a = mesh.vertices[tri[0]];
    total += 0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kZeroAreaMesh, "mesh has no surface area");

  PointCloud out;
  if (n == 0) return out;
  out.points.resize(n);

  std::mt19937_64 offset_rng(mix_seed(seed, ~0ULL));
  const double offset = unit_uniform(offset_rng);

  // counts[f] = number of stratified positions (k + offset) * total / n that
  // fall into triangle f; the counts sum to n.
  std::vector<std::size_t> first(nf + 1, 0);
  {
    std::size_t f = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double pos = (static_cast<double>(k) + offset) * total / static_cast<double>(n);
      while (f + 1 < nf && cumulative[f] <= pos) ++f;
      ++first[f + 1];
    }
    for (std::size_t f = 0; f < nf; ++f) first[f + 1] += first[f];
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t fi = 0; fi < static_cast<std::int64_t>(nf); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    const std::size_t begin = first[f];
    const std::size_t end = first[f + 1];
    if (begin == end) continue;
    const auto& tri = mesh.faces[f];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    std::mt19937_64 rng(mix_seed(seed, f));
    for (std::size_t i = begin; i < end; ++i) {
      const double r1 = std::sqrt(unit_uniform(rng));
      const double r2 = unit_uniform(rng);
      out.points[i] = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    }
  }
  return out;
}

}  // namespace scancad
