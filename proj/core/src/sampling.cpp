#include "incstab/sampling.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace incstab {

namespace {

constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                         41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

int prime(int axis) {
  if (axis < 0 || axis >= static_cast<int>(kPrimes.size()))
    throw std::invalid_argument("halton: dimension above 24 is not supported");
  return kPrimes[static_cast<std::size_t>(axis)];
}

// Counter-based uniform draw in [0, 1) from a seeded engine; std distributions
// are avoided so the stream is identical across standard libraries.
double unit_draw(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal_draw(std::mt19937_64 &rng) {
  double u1 = unit_draw(rng);
  while (u1 <= 0.0) u1 = unit_draw(rng);
  const double u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector sphere_draw(int dim, std::mt19937_64 &rng) {
  Vector v(dim);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < dim; ++i) v[i] = normal_draw(rng);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

std::vector<Vector> halton_box(const Vector &lo, const Vector &hi, std::size_t count,
                               std::size_t skip) {
  if (lo.size() != hi.size()) throw DimensionError("halton_box: bounds differ in dimension");
  const int dim = static_cast<int>(lo.size());
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector p(dim);
    for (int i = 0; i < dim; ++i) {
      const double u = radical_inverse(k + 1 + skip, prime(i));
      p[i] = lo[i] + u * (hi[i] - lo[i]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vector> unit_sphere(int dim, std::size_t count) {
  if (dim <= 0) throw DimensionError("unit_sphere: dimension must be positive");
  std::vector<Vector> out;
  out.reserve(count);
  if (dim == 1) {
    for (std::size_t k = 0; k < count; ++k) out.push_back(Vector::Constant(1, k % 2 ? -1.0 : 1.0));
    return out;
  }
  // Halton points in the cube, radially projected; near-origin points are skipped.
  std::uint64_t index = 1;
  while (out.size() < count) {
    Vector p(dim);
    for (int i = 0; i < dim; ++i) p[i] = 2.0 * radical_inverse(index, prime(i)) - 1.0;
    ++index;
    const double n = p.norm();
    if (n < 1e-3) continue;
    out.push_back(p / n);
  }
  return out;
}

std::vector<Vector> box_grid(int dim, double half_width, int per_axis) {
  if (dim <= 0 || per_axis < 2) throw std::invalid_argument("box_grid: need dim > 0, per_axis >= 2");
  std::vector<double> axis(static_cast<std::size_t>(per_axis));
  for (int i = 0; i < per_axis; ++i)
    axis[static_cast<std::size_t>(i)] =
        -half_width + 2.0 * half_width * static_cast<double>(i) / (per_axis - 1);
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(per_axis);
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vector p(dim);
    for (int d = 0; d < dim; ++d) p[d] = axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
    out.push_back(std::move(p));
    for (int d = 0; d < dim; ++d) {
      auto &i = idx[static_cast<std::size_t>(d)];
      if (++i < per_axis) break;
      i = 0;
    }
  }
  return out;
}

std::vector<Vector> ball_grid(int dim, double radius, int per_axis) {
  std::vector<Vector> out;
  const double limit = radius * (1.0 + 1e-12);
  for (auto &p : box_grid(dim, radius, per_axis))
    if (p.norm() <= limit) out.push_back(std::move(p));
  return out;
}

std::vector<std::pair<Vector, Vector>> state_displacement_samples(const Vector &lo,
                                                                  const Vector &hi,
                                                                  std::size_t count) {
  const auto states = halton_box(lo, hi, count);
  const auto dirs = unit_sphere(static_cast<int>(lo.size()), count);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.emplace_back(states[k], dirs[k]);
  return out;
}

std::vector<std::pair<Vector, Vector>> ball_displacement_samples(int dim, double radius,
                                                                 std::size_t count) {
  const Vector lo = Vector::Constant(dim, -radius);
  const Vector hi = Vector::Constant(dim, radius);
  const auto dirs = unit_sphere(dim, count);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  std::size_t skip = 20;
  while (out.size() < count) {
    for (auto &z : halton_box(lo, hi, count, skip)) {
      if (z.norm() > radius) continue;
      out.emplace_back(std::move(z), dirs[out.size()]);
      if (out.size() == count) break;
    }
    skip += count;
  }
  return out;
}

std::vector<std::pair<Vector, Vector>> random_pairs_in_box(const Vector &lo, const Vector &hi,
                                                           std::size_t count,
                                                           std::uint64_t seed) {
  if (lo.size() != hi.size()) throw DimensionError("random_pairs_in_box: bounds differ in dimension");
  std::mt19937_64 rng(seed);
  const auto draw = [&] {
    Vector p(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) p[i] = lo[i] + unit_draw(rng) * (hi[i] - lo[i]);
    return p;
  };
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  while (out.size() < count) {
    Vector a = draw();
    Vector b = draw();
    if ((a - b).norm() > 0.0) out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

std::vector<std::pair<Vector, Vector>> random_pairs_on_sphere(int dim, double radius,
                                                              std::size_t count,
                                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  while (out.size() < count) {
    Vector a = radius * sphere_draw(dim, rng);
    Vector b = radius * sphere_draw(dim, rng);
    if ((a - b).norm() > 1e-9 * radius) out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

}  // namespace incstab
