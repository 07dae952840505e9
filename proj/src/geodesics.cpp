#include "nilgeo/geodesics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace nilgeo {

namespace {

// g(a) = (a - sin a) / (2 a^2) and its derivative, with series near 0
double g_fun(double a) {
  if (std::abs(a) < 1e-2) {
    double a2 = a * a;
    return a / 12.0 * (1.0 - a2 / 20.0 + a2 * a2 / 840.0 - a2 * a2 * a2 / 60480.0);
  }
  return (a - std::sin(a)) / (2.0 * a * a);
}

double g_prime(double a) {
  if (std::abs(a) < 1e-2) {
    double a2 = a * a;
    return 1.0 / 12.0 - a2 / 80.0 + a2 * a2 / 2016.0 - a2 * a2 * a2 / 103680.0;
  }
  return (2.0 * std::sin(a) - a * std::cos(a) - a) / (2.0 * a * a * a);
}

// |2 sin(a/2)| / a
double chord_ratio(double a) {
  if (std::abs(a) < 1e-4) return 1.0 - a * a / 24.0;
  return std::abs(2.0 * std::sin(0.5 * a)) / a;
}

Mat skew(const Mat& M) { return 0.5 * (M - M.transpose()); }

}  // namespace

void validate_params(const SubRiemannianStructure& S, const NormalGeodesicParams& p, double tol) {
  const Eigen::Index dv = S.v_orthonormal().cols();
  if (p.M.rows() != dv || p.M.cols() != dv || p.b.size() != dv || p.c.size() != dv || p.zeta.size() != S.rank())
    throw SpecError("geodesic params: wrong dimensions");
  double scale = std::max(1.0, p.M.cwiseAbs().maxCoeff());
  if ((p.M + p.M.transpose()).cwiseAbs().maxCoeff() > tol * scale) throw SpecError("geodesic params: M not skew");
  if (dv > 0 && (p.M * p.b).norm() > tol * scale * std::max(1.0, p.b.norm()))
    throw SpecError("geodesic params: b not in ker M");
  // c in range(M) = orthogonal complement of ker(M) for skew M
  if (dv > 0) {
    Eigen::JacobiSVD<Mat> svd(p.M, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) <= 1e-10 * scale && std::abs(svd.matrixV().col(i).dot(p.c)) > tol * std::max(1.0, p.c.norm()))
        throw SpecError("geodesic params: c not in range M");
  }
  // drift must lie in Delta ∩ [g,g]
  Vec amb = S.horizontal() * p.zeta;
  Vec ab = abelian_projection(S.algebra(), amb);
  if (ab.size() && ab.cwiseAbs().maxCoeff() > tol * std::max(1.0, amb.norm()))
    throw SpecError("geodesic params: zeta is not vertical");
}

NormalGeodesicParams params_from_velocity(const Mat& M, const Vec& w, const Vec& zeta) {
  Mat Ms = skew(M);
  NormalGeodesicParams p;
  p.M = Ms;
  p.zeta = zeta;
  // split w = b - M c with b in ker M
  // same rank cut as validate_params, so near-kernel directions land in b
  const double scale = std::max(1.0, Ms.cwiseAbs().maxCoeff());
  Eigen::JacobiSVD<Mat> svd(Ms, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  p.c = Vec::Zero(w.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * scale) p.c -= svd.matrixV().col(i) * (svd.matrixU().col(i).dot(w) / sv(i));
  p.b = w + Ms * p.c;
  return p;
}

Vec normal_geodesic_point(const SubRiemannianStructure& S, const NormalGeodesicParams& p, double t,
                          Eigen::Index grid) {
  validate_params(S, p, 1e-8);
  if (grid < 3 || grid % 2 == 0) throw SpecError("normal_geodesic_point: grid must be odd");
  const auto& g = S.algebra();
  const Mat HV = S.horizontal() * S.v_orthonormal();
  const Mat M = skew(p.M);
  Vec out = Vec::Zero(g.dim());
  if (t == 0.0) return out;
  const double h = t / static_cast<double>(grid - 1);
  const Mat step = (h * M).exp();
  Mat E = Mat::Identity(M.rows(), M.cols());
  std::vector<GridPiece> pieces{{0, grid, 0.0, 1.0}};
  Vec w = simpson_weights(pieces, grid) * t;
  Vec vert = Vec::Zero(g.dim());
  Vec x;
  for (Eigen::Index j = 0; j < grid; ++j) {
    Vec xs = p.c - E * p.c + (j * h) * p.b;
    Vec dxs = -M * E * p.c + p.b;
    vert += w(j) * g.bracket(Vec(HV * xs), Vec(HV * dxs));
    if (j + 1 == grid) x = xs;
    E = E * step;
  }
  return HV * x + 0.5 * vert + t * (S.horizontal() * p.zeta);
}

SampledControl normal_geodesic_control(const SubRiemannianStructure& S, const NormalGeodesicParams& p,
                                       Eigen::Index grid) {
  validate_params(S, p, 1e-8);
  const Mat& V = S.v_orthonormal();
  const Mat M = skew(p.M);
  const double h = 1.0 / static_cast<double>(grid - 1);
  const Mat step = (h * M).exp();
  Mat E = Mat::Identity(M.rows(), M.cols());
  Mat vals(grid, S.rank());
  for (Eigen::Index j = 0; j < grid; ++j) {
    vals.row(j) = (V * (-M * E * p.c + p.b) + p.zeta).transpose();
    E = E * step;
  }
  return SampledControl(vals);
}

double heisenberg_sr_distance(const Vec& p) {
  if (p.size() != 3) throw SpecError("heisenberg_sr_distance: expects (x,y,z)");
  const double rho = std::hypot(p(0), p(1));
  const double z = std::abs(p(2));
  if (z == 0.0) return rho;
  if (rho == 0.0) return 2.0 * std::sqrt(kPi * z);
  const double target = z / (rho * rho);
  auto lhs = [](double phi) {
    double num = phi < 1e-3 ? phi * phi * phi / 6.0 * (1.0 - phi * phi / 20.0) : phi - std::sin(phi);
    double s = std::sin(0.5 * phi);
    return num / (8.0 * s * s);
  };
  double phi = bracketed_root([&](double a) { return lhs(a) - target; }, 1e-12, 2.0 * kPi - 1e-12, 1e-15);
  // Newton polish on the smooth residual
  for (int it = 0; it < 3; ++it) {
    double hstep = 1e-7 * std::max(phi, 1e-3);
    double f = lhs(phi) - target;
    double df = (lhs(phi + hstep) - lhs(phi - hstep)) / (2.0 * hstep);
    double next = phi - f / df;
    if (!(next > 0.0 && next < 2.0 * kPi) || std::abs(lhs(next) - target) >= std::abs(f)) break;
    phi = next;
  }
  double half = 0.5 * phi;
  double s = half < 1e-4 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  return rho / s;
}

Vec heisenberg_riemannian_endpoint(const HeisenbergGeodesicParams& q) {
  const double k = q.k, t = q.t;
  const double ct = std::cos(q.theta), st = std::sin(q.theta);
  double cm1, sk, zz;  // (cos kt - 1)/k, sin(kt)/k, (kt - sin kt)/(2k^2)
  if (std::abs(k) < 1e-4) {
    double k2 = k * k, t2 = t * t;
    cm1 = -k * t2 / 2.0 + k * k2 * t2 * t2 / 24.0 - k * k2 * k2 * t2 * t2 * t2 / 720.0;
    sk = t - k2 * t * t2 / 6.0 + k2 * k2 * t * t2 * t2 / 120.0;
    zz = k * t * t2 / 12.0 - k * k2 * t * t2 * t2 / 240.0 + k * k2 * k2 * t * t2 * t2 * t2 / 10080.0;
  } else {
    cm1 = (std::cos(k * t) - 1.0) / k;
    sk = std::sin(k * t) / k;
    zz = (k * t - std::sin(k * t)) / (2.0 * k * k);
  }
  Vec out(3);
  out << ct * cm1 - st * sk, st * cm1 + ct * sk, zz + k * t;
  return out;
}

double heisenberg_profile_x(double r, double a) { return std::sqrt(std::max(r * r - a * a, 0.0)) * chord_ratio(a); }

double heisenberg_profile_z(double r, double a) { return (r * r - a * a) * g_fun(a) + a; }

double heisenberg_profile_dz(double r, double a) { return -2.0 * a * g_fun(a) + (r * r - a * a) * g_prime(a) + 1.0; }

Vec heisenberg_profile(double r, double alpha) {
  if (!(alpha > 0.0) || alpha >= std::min(2.0 * kPi, r)) throw SpecError("heisenberg_profile: alpha out of range");
  Vec p(3);
  p << heisenberg_profile_x(r, alpha), 0.0, heisenberg_profile_z(r, alpha);
  return p;
}

namespace {

// height of the sphere of radius r above planar radius rho (rho < r)
double sphere_height(double r, double rho) {
  const double amax = std::min(2.0 * kPi, r);
  if (rho <= 0.0) return r <= 2.0 * kPi ? r : (r * r - 4.0 * kPi * kPi) / (4.0 * kPi) + 2.0 * kPi;
  if (rho >= r) return 0.0;
  double a = bracketed_root([&](double al) { return heisenberg_profile_x(r, al) - rho; }, 0.0, amax, 1e-15 * amax);
  return heisenberg_profile_z(r, a);
}

}  // namespace

Interval heisenberg_riemannian_distance(const Vec& p) {
  if (p.size() != 3) throw SpecError("heisenberg_riemannian_distance: expects (x,y,z)");
  const double rho = std::hypot(p(0), p(1));
  const double z = std::abs(p(2));
  if (z == 0.0) return {rho, rho};
  if (rho == 0.0) {
    double d = z <= 2.0 * kPi ? z : std::sqrt(4.0 * kPi * (z - kPi));
    return {d, d};
  }
  double lo = rho, hi = rho + z;
  auto f = [&](double r) { return sphere_height(r, rho) - z; };
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) return {lo, hi};
  for (int it = 0; it < 200 && hi - lo > 2e-14 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, hi};
}

}  // namespace nilgeo
