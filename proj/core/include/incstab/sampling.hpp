#pragma once

#include "incstab/dynsys.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace incstab {

/// Radical inverse of `index` in the given prime base.
double radical_inverse(std::uint64_t index, int base);

/// `count` Halton points in the box [lo, hi] (componentwise). The first
/// `skip` points of the sequence are discarded.
std::vector<Vector> halton_box(const Vector &lo, const Vector &hi, std::size_t count,
                               std::size_t skip = 20);

/// Deterministic directions on the unit sphere of R^dim. In one dimension the
/// two directions {+1, -1} are alternated.
std::vector<Vector> unit_sphere(int dim, std::size_t count);

/// Uniform tensor grid with `per_axis` points on [-half_width, half_width]^dim.
std::vector<Vector> box_grid(int dim, double half_width, int per_axis);

/// Points of box_grid(dim, radius, per_axis) lying in the closed ball of the
/// given radius.
std::vector<Vector> ball_grid(int dim, double radius, int per_axis);

/// Pairs (z, dz): Halton states in the box, displacement directions on the
/// unit sphere.
std::vector<std::pair<Vector, Vector>> state_displacement_samples(const Vector &lo,
                                                                  const Vector &hi,
                                                                  std::size_t count);

/// Same as above with states restricted to the ball of the given radius.
std::vector<std::pair<Vector, Vector>> ball_displacement_samples(int dim, double radius,
                                                                 std::size_t count);

/// Seeded pseudo-random pairs of initial conditions inside a box; pairs with
/// zero separation are redrawn.
std::vector<std::pair<Vector, Vector>> random_pairs_in_box(const Vector &lo, const Vector &hi,
                                                           std::size_t count,
                                                           std::uint64_t seed);

/// Seeded pairs with both points on the sphere of the given radius.
std::vector<std::pair<Vector, Vector>> random_pairs_on_sphere(int dim, double radius,
                                                              std::size_t count,
                                                              std::uint64_t seed);

}  // namespace incstab
