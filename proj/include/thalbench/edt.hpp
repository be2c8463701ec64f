#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

namespace thalbench::edt {

template <typename Scalar>
constexpr Scalar infinity() {
  if constexpr (std::is_floating_point_v<Scalar>)
    return std::numeric_limits<Scalar>::infinity();
  else
    return std::numeric_limits<Scalar>::max();
}

template <typename Scalar>
Scalar floor_div(Scalar num, Scalar den) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return std::floor(num / den);
  } else {
    Scalar q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return q;
  }
}

/// Lower envelope of parabolas w2*(x-i)^2 + f[i] over a strided line,
/// written back in place. Infinite entries contribute no parabola.
/// Integer Scalar gives exact results; floating Scalar supports anisotropic
/// weights.
template <typename Scalar>
void transform_line(Scalar* f, std::int64_t n, std::int64_t stride, Scalar w2,
                    std::vector<std::int64_t>& sites, std::vector<std::int64_t>& starts,
                    std::vector<Scalar>& line) {
  constexpr Scalar kInf = infinity<Scalar>();
  line.resize(static_cast<std::size_t>(n));
  sites.resize(static_cast<std::size_t>(n));
  starts.resize(static_cast<std::size_t>(n));
  for (std::int64_t u = 0; u < n; ++u) line[u] = f[u * stride];

  const auto value = [&](std::int64_t x, std::int64_t i) {
    const Scalar d = static_cast<Scalar>(x - i);
    return w2 * d * d + line[i];
  };
  const auto sep = [&](std::int64_t i, std::int64_t u) {
    const Scalar si = static_cast<Scalar>(i), su = static_cast<Scalar>(u);
    return floor_div<Scalar>(w2 * (su * su - si * si) + line[u] - line[i], 2 * w2 * (su - si));
  };

  std::int64_t q = -1;
  for (std::int64_t u = 0; u < n; ++u) {
    if (line[u] == kInf) continue;
    while (q >= 0 && value(starts[q], sites[q]) > value(starts[q], u)) --q;
    if (q < 0) {
      q = 0;
      sites[0] = u;
      starts[0] = 0;
    } else {
      const Scalar w = 1 + sep(sites[q], u);
      if (w < static_cast<Scalar>(n)) {
        ++q;
        sites[q] = u;
        starts[q] = static_cast<std::int64_t>(w);
      }
    }
  }
  if (q < 0) return;  // no sites: line stays infinite
  for (std::int64_t u = n - 1; u >= 0; --u) {
    f[u * stride] = value(u, sites[q]);
    if (u == starts[q]) --q;
  }
}

/// Squared Euclidean distance to the nearest site of a 3D grid (x fastest).
/// `sites` is nonzero at target voxels. `weights2` holds the squared per-axis
/// step lengths. Voxels with no site anywhere stay at infinity<Scalar>().
template <typename Scalar>
std::vector<Scalar> squared_distance_transform(std::span<const std::uint8_t> sites,
                                               const std::array<std::int64_t, 3>& dims,
                                               const std::array<Scalar, 3>& weights2) {
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<Scalar> f(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) f[i] = sites[i] ? Scalar(0) : infinity<Scalar>();

  std::vector<std::int64_t> s, t;
  std::vector<Scalar> line;
  for (std::int64_t z = 0; z < nz; ++z)
    for (std::int64_t y = 0; y < ny; ++y)
      transform_line<Scalar>(f.data() + nx * (y + ny * z), nx, 1, weights2[0], s, t, line);
  for (std::int64_t z = 0; z < nz; ++z)
    for (std::int64_t x = 0; x < nx; ++x)
      transform_line<Scalar>(f.data() + x + nx * ny * z, ny, nx, weights2[1], s, t, line);
  for (std::int64_t y = 0; y < ny; ++y)
    for (std::int64_t x = 0; x < nx; ++x)
      transform_line<Scalar>(f.data() + x + nx * y, nz, nx * ny, weights2[2], s, t, line);
  return f;
}

}  // namespace thalbench::edt
