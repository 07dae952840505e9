#pragma once

#include "nilgeo/core.hpp"

#include <functional>
#include <vector>

namespace nilgeo {

// A uniform sub-grid [t0, t1] occupying rows first .. first+count-1 of a sample matrix.
struct GridPiece {
  Eigen::Index first;
  Eigen::Index count;
  double t0;
  double t1;
  double step() const { return (t1 - t0) / static_cast<double>(count - 1); }
};

// Composite Simpson weights over all pieces (each piece needs an odd node count >= 3).
Vec simpson_weights(const std::vector<GridPiece>& pieces, Eigen::Index total);

// Running integral from 0 to each node, fourth order (cubic interpolation on each interval).
Mat cumulative_integral(const Mat& values, const std::vector<GridPiece>& pieces);

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, Vec& nodes, Vec& weights);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40);

// Bisection on a sign change, polished by secant steps kept inside the bracket.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi, double xtol = 1e-13,
                      int max_iter = 200);

}  // namespace nilgeo
