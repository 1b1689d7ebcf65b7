#pragma once

#include "incstab/dynsys.hpp"

#include <string>
#include <vector>

namespace incstab::cli {

struct Monomial {
  double coef = 0.0;
  std::vector<int> exponents;
};

/// Multivariate polynomial in `vars` variables as a list of monomials.
struct Polynomial {
  int vars = 0;
  std::vector<Monomial> terms;

  double eval(const Vector &z) const;
  Vector gradient(const Vector &z) const;
};

/// Parses "coef e1 ... ek; coef e1 ... ek; ..." with k = vars. An empty string
/// is the zero polynomial. Throws std::invalid_argument on malformed terms.
Polynomial parse_polynomial(const std::string &text, int vars);

/// Vector of polynomials sharing the same input dimension.
struct PolynomialMap {
  int input_dim = 0;
  std::vector<Polynomial> components;

  Vector eval(const Vector &z) const;
  Matrix jacobian(const Vector &z) const;
};

/// Blocks of x' = f1(x) + rho1 g1(y), y' = f2(y) + rho2 g2(x).
struct PolynomialBlocks {
  PolynomialMap f1;  // R^n -> R^n
  PolynomialMap f2;  // R^m -> R^m
  PolynomialMap g1;  // R^m -> R^n
  PolynomialMap g2;  // R^n -> R^m
};

Interconnection polynomial_interconnection(const PolynomialBlocks &blocks, double rho1,
                                           double rho2);

}  // namespace incstab::cli
