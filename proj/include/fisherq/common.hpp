#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fisherq {

using cplx = std::complex<double>;

using ArrayXr = Eigen::ArrayXd;
using ArrayXc = Eigen::ArrayXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy used across the library; the CLI maps these to exit codes.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PropagationError : std::runtime_error {
  explicit PropagationError(const std::string& msg) : std::runtime_error(msg) {}
};

// hbar, particle mass, charge and speed-of-light factor; all default to 1 so
// equations can be transcribed literally in Gaussian-style units.
struct PhysicalConstants {
  double hbar = 1.0;
  double m = 1.0;
  double e = 1.0;
  double c = 1.0;

  double mu_bohr() const { return -hbar * e / (2.0 * m * c); }
};

}  // namespace fisherq
