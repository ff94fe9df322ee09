#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace yamabe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy shared by all modules.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct SingularMetricError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct QuadratureError : Error {
  using Error::Error;
};
struct AssemblyError : Error {
  using Error::Error;
};

// Small deterministic generator. std distributions are implementation
// defined, so the mapping to doubles is done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::uint64_t state_;
};

inline double sq(double x) { return x * x; }

constexpr double kPi = 3.14159265358979323846;

// Area of the unit sphere S^{d} in R^{d+1}.
double sphere_area(int d);

// Point of the closed half-space: last coordinate >= 0.
void require_half_space(const Vec& y, const char* where);
bool on_boundary(const Vec& y, double tol = 0.0);

}  // namespace yamabe
