#include "nilgeo/quadrature.hpp"

#include <cmath>
#include <limits>

namespace nilgeo {

Vec simpson_weights(const std::vector<GridPiece>& pieces, Eigen::Index total) {
  Vec w = Vec::Zero(total);
  for (const auto& p : pieces) {
    if (p.count < 3 || p.count % 2 == 0) throw SpecError("simpson: piece needs an odd node count >= 3");
    const double h = p.step();
    for (Eigen::Index j = 0; j < p.count; ++j) {
      double c = (j == 0 || j == p.count - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      w(p.first + j) += c * h / 3.0;
    }
  }
  return w;
}

Mat cumulative_integral(const Mat& f, const std::vector<GridPiece>& pieces) {
  Mat I = Mat::Zero(f.rows(), f.cols());
  Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(f.cols());
  for (const auto& p : pieces) {
    const Eigen::Index n = p.count;
    const Eigen::Index o = p.first;
    const double h = p.step();
    I.row(o) = carry;
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      Eigen::RowVectorXd seg;
      if (n == 3) {
        if (j == 0)
          seg = (h / 12.0) * (5.0 * f.row(o) + 8.0 * f.row(o + 1) - f.row(o + 2));
        else
          seg = (h / 12.0) * (-f.row(o) + 8.0 * f.row(o + 1) + 5.0 * f.row(o + 2));
      } else if (j == 0) {
        seg = (h / 24.0) * (9.0 * f.row(o) + 19.0 * f.row(o + 1) - 5.0 * f.row(o + 2) + f.row(o + 3));
      } else if (j == n - 2) {
        seg = (h / 24.0) * (f.row(o + n - 4) - 5.0 * f.row(o + n - 3) + 19.0 * f.row(o + n - 2) +
                            9.0 * f.row(o + n - 1));
      } else {
        seg = (h / 24.0) * (-f.row(o + j - 1) + 13.0 * f.row(o + j) + 13.0 * f.row(o + j + 1) - f.row(o + j + 2));
      }
      I.row(o + j + 1) = I.row(o + j) + seg;
    }
    carry = I.row(o + n - 1);
  }
  return I;
}

namespace {

// Legendre P_n(x) and its derivative.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = (n == 0) ? 1.0 : p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

void gauss_legendre(int n, double a, double b, Vec& nodes, Vec& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(n, x, p, dp);
    nodes(i) = 0.5 * (a + b) - 0.5 * (b - a) * x;
    weights(i) = (b - a) / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  // below the roundoff floor the halved tolerance can never be met
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
  if (depth <= 0 || std::abs(delta) <= std::max(15.0 * tol, floor)) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  // start from a few panels so that symmetric integrands cannot fool the first comparison
  const int panels = 16;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    double x0 = a + (b - a) * i / panels, x1 = a + (b - a) * (i + 1) / panels;
    double f0 = f(x0), f1 = f(x1), fm = f(0.5 * (x0 + x1));
    double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_rec(f, x0, x1, f0, fm, f1, whole, tol / panels, max_depth);
  }
  return total;
}

double bracketed_root(const std::function<double(double)>& f, double lo, double hi, double xtol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw SolverDegenerate("bracketed_root: no sign change");
  for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
    double x = lo - flo * (hi - lo) / (fhi - flo);
    // fall back to bisection when the secant estimate hugs an end of the bracket
    double span = hi - lo;
    if (!(x > lo + 0.05 * span && x < hi - 0.05 * span)) x = 0.5 * (lo + hi);
    double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace nilgeo
