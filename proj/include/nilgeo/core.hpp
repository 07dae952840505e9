#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace nilgeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr const char* kVersion = "0.3.1";

// Malformed input: bad spec, wrong dimensions, invalid parameters.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant did not hold (bug or numerically degenerate input).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NoIsometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Infeasible : public std::runtime_error {
 public:
  Infeasible(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual(best_residual) {}
  double best_residual;
};

// splitmix64 finalizer; derives independent stream seeds from (seed, counter).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Vec gaussian_vector(Rng& rng, Eigen::Index n, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace nilgeo
