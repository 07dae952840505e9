#pragma once

#include "nilgeo/geodesics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nilgeo {

struct Budget {
  Eigen::Index grid = 2049;  // witness verification grid
  int modes = 12;            // polynomial degree of the control basis
  int starts = 16;
  std::uint64_t seed = 1;
  int penalty_stages = 6;
  double feas_tol = 1e-6;  // witness endpoint residual, relative to max(1, |target|)
  int panels = 256;        // Magnus panels for the product backend
};

struct DistanceEstimate {
  double lower = 0.0;
  double upper = 0.0;
  Vec target;
  std::vector<std::string> methods;
  double residual = 0.0;
  std::optional<SampledControl> witness;
  std::optional<NormalGeodesicParams> geodesic;
  Vec coefficients;  // whitened basis coefficients of the witness
  int best_start = -1;
  bool exact = false;
};

double distance_lower(const SubRiemannianStructure& S, const Vec& target);

DistanceEstimate distance_upper(const SubRiemannianStructure& S, const Vec& target, const Budget& budget = {});

DistanceEstimate distance_shooting(const SubRiemannianStructure& S, const Vec& target, const Budget& budget = {});

DistanceEstimate asymptotic_distance(const SubRiemannianStructure& S, const Vec& target, const Budget& budget = {});

// Closed-form distance for Heisenberg-type structures (sub-Riemannian with any metric on a plane
// complementary to the center, or Riemannian with a compatible unit center), times central Euclidean factors.
std::optional<Interval> exact_distance(const SubRiemannianStructure& S, const Vec& target);
bool has_exact_oracle(const SubRiemannianStructure& S);

// Exact interval when recognized, otherwise [abelianization bound, optimizer bound].
DistanceEstimate distance_bracket(const SubRiemannianStructure& S, const Vec& target, const Budget& budget = {});

}  // namespace nilgeo
