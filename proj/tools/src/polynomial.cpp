#include "incstab/cli/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace incstab::cli {

namespace {

double power(double base, int e) { return e == 0 ? 1.0 : std::pow(base, e); }

}  // namespace

double Polynomial::eval(const Vector &z) const {
  double sum = 0.0;
  for (const auto &t : terms) {
    double v = t.coef;
    for (int i = 0; i < vars; ++i) v *= power(z[i], t.exponents[i]);
    sum += v;
  }
  return sum;
}

Vector Polynomial::gradient(const Vector &z) const {
  Vector g = Vector::Zero(vars);
  for (const auto &t : terms) {
    for (int k = 0; k < vars; ++k) {
      if (t.exponents[k] == 0) continue;
      double v = t.coef * t.exponents[k];
      for (int i = 0; i < vars; ++i)
        v *= i == k ? power(z[i], t.exponents[i] - 1) : power(z[i], t.exponents[i]);
      g[k] += v;
    }
  }
  return g;
}

Polynomial parse_polynomial(const std::string &text, int vars) {
  Polynomial p;
  p.vars = vars;
  std::stringstream terms(text);
  std::string term;
  while (std::getline(terms, term, ';')) {
    std::istringstream in(term);
    Monomial m;
    if (!(in >> m.coef)) {
      if (term.find_first_not_of(" \t") == std::string::npos) continue;
      throw std::invalid_argument("polynomial term '" + term + "' has no coefficient");
    }
    int e = 0;
    while (in >> e) {
      if (e < 0) throw std::invalid_argument("negative exponent in term '" + term + "'");
      m.exponents.push_back(e);
    }
    if (!in.eof())
      throw std::invalid_argument("non-integer exponent in term '" + term + "'");
    if (static_cast<int>(m.exponents.size()) != vars)
      throw std::invalid_argument("term '" + term + "' needs " + std::to_string(vars) +
                                  " exponents");
    p.terms.push_back(std::move(m));
  }
  return p;
}

Vector PolynomialMap::eval(const Vector &z) const {
  Vector out(static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < components.size(); ++i) out[static_cast<Eigen::Index>(i)] = components[i].eval(z);
  return out;
}

Matrix PolynomialMap::jacobian(const Vector &z) const {
  Matrix j(static_cast<Eigen::Index>(components.size()), input_dim);
  for (std::size_t i = 0; i < components.size(); ++i)
    j.row(static_cast<Eigen::Index>(i)) = components[i].gradient(z).transpose();
  return j;
}

Interconnection polynomial_interconnection(const PolynomialBlocks &blocks, double rho1,
                                           double rho2) {
  const auto field = [](const PolynomialMap &map) {
    TimeVaryingField f;
    f.dim = map.input_dim;
    f.eval = [map](double, const Vector &z) { return map.eval(z); };
    f.jacobian = [map](double, const Vector &z) { return map.jacobian(z); };
    return f;
  };
  const auto coupling = [](const PolynomialMap &map) {
    CouplingMap g;
    g.input_dim = map.input_dim;
    g.output_dim = static_cast<int>(map.components.size());
    g.eval = [map](const Vector &z) { return map.eval(z); };
    g.jacobian = [map](const Vector &z) { return map.jacobian(z); };
    return g;
  };
  Interconnection ic;
  ic.f1 = field(blocks.f1);
  ic.f2 = field(blocks.f2);
  ic.g1 = coupling(blocks.g1);
  ic.g2 = coupling(blocks.g2);
  ic.rho1 = rho1;
  ic.rho2 = rho2;
  return ic;
}

}  // namespace incstab::cli
