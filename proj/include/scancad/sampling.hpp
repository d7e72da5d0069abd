#pragma once

#include <cstdint>

#include "scancad/geometry.hpp"

namespace scancad {

// Area-weighted uniform surface sampling with exactly `n` points.
//
// Triangle counts come from systematic sampling of the cumulative area with a
// single offset drawn from `seed`; the positions inside each triangle come
// from a random stream keyed by (seed, triangle index). The output therefore
// does not depend on how the triangles are split across threads.
PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

// Deterministic 64-bit mixer used to key per-triangle streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace scancad
