#pragma once

#include "nilgeo/controls.hpp"

namespace nilgeo {

// x(t) = c - e^{tM} c + t b in the rho-orthonormal basis of V; zeta in Delta coordinates (drift part).
struct NormalGeodesicParams {
  Mat M;
  Vec b;
  Vec c;
  Vec zeta;
};

void validate_params(const SubRiemannianStructure& S, const NormalGeodesicParams& p, double tol = 1e-10);

// Builds valid params from an arbitrary skew M, an initial velocity w in V and a drift.
NormalGeodesicParams params_from_velocity(const Mat& M, const Vec& w, const Vec& zeta);

Vec normal_geodesic_point(const SubRiemannianStructure& S, const NormalGeodesicParams& p, double t,
                          Eigen::Index grid = 2049);
SampledControl normal_geodesic_control(const SubRiemannianStructure& S, const NormalGeodesicParams& p,
                                       Eigen::Index grid = 2049);

double heisenberg_sr_distance(const Vec& p);

struct HeisenbergGeodesicParams {
  double k;
  double theta;
  double t;
};

Vec heisenberg_riemannian_endpoint(const HeisenbergGeodesicParams& p);

// Boundary of the Riemannian ball of radius r in the (x, z) half plane.
Vec heisenberg_profile(double r, double alpha);
double heisenberg_profile_x(double r, double alpha);
double heisenberg_profile_z(double r, double alpha);
double heisenberg_profile_dz(double r, double alpha);  // d z / d alpha

struct Interval {
  double lo;
  double hi;
  double mid() const { return 0.5 * (lo + hi); }
};

Interval heisenberg_riemannian_distance(const Vec& p);

}  // namespace nilgeo
