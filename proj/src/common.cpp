#include "yamabe/common.hpp"

#include <cmath>

namespace yamabe {

double sphere_area(int d) {
  // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2)
  return 2.0 * std::pow(kPi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

void require_half_space(const Vec& y, const char* where) {
  if (y.size() < 2) throw ParameterError(std::string(where) + ": point dimension must be at least 2");
  if (y(y.size() - 1) < 0.0) throw DomainError(std::string(where) + ": point outside the closed half-space");
}

bool on_boundary(const Vec& y, double tol) { return std::abs(y(y.size() - 1)) <= tol; }

}  // namespace yamabe
