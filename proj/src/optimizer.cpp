#include "nilgeo/optimizer.hpp"

#include "nilgeo/quadrature.hpp"

#include <cmath>

namespace nilgeo {

Mat EndpointModel::lagrangian_hessian(const Vec&, const Vec&) const {
  throw InvariantViolation("endpoint model has no Hessian");
}

namespace {

struct Objective {
  const EndpointModel& model;
  const Vec& target;
  const Vec& d;
  const Vec& sq;  // square roots of the residual weights
  double mu;
  Vec shift;  // weighted lambda / (2 mu)

  double value(const Vec& s, Vec* F = nullptr) const {
    Vec f;
    model.evaluate(s, f, nullptr);
    if (F) *F = f;
    return s.dot(d.cwiseProduct(s)) + mu * (sq.cwiseProduct(f - target) + shift).squaredNorm();
  }
};

// Levenberg-Marquardt on s^T D s + mu |W^{1/2}(F(s) - T) + shift|^2.
// The normal matrix is diagonal plus mu J^T J, inverted through the small n x n system.
Vec minimize_penalty(const Objective& obj, Vec s, int iters) {
  const EndpointModel& model = obj.model;
  const int n = model.num_outputs();
  double nu = 1e-3;
  Vec F;
  Mat J;
  model.evaluate(s, F, &J);
  J = obj.sq.asDiagonal() * J;
  double phi = obj.value(s);
  for (int it = 0; it < iters; ++it) {
    Vec r = obj.sq.cwiseProduct(F - obj.target) + obj.shift;
    Vec b = -(obj.d.cwiseProduct(s) + obj.mu * J.transpose() * r);
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Vec cinv = (obj.d.array() + nu).inverse().matrix();
      Vec cb = cinv.cwiseProduct(b);
      Mat JC = J * cinv.asDiagonal();
      Mat small = JC * J.transpose();
      small.diagonal().array() += 1.0 / obj.mu;
      Vec y = small.ldlt().solve(J * cb);
      Vec ds = cb - JC.transpose() * y;
      Vec trial = s + ds;
      Vec Ft;
      double pt = obj.value(trial, &Ft);
      if (std::isfinite(pt) && pt < phi) {
        double gain = phi - pt;
        s = trial;
        phi = pt;
        nu = std::max(nu / 3.0, 1e-12);
        accepted = true;
        model.evaluate(s, F, &J);
        J = obj.sq.asDiagonal() * J;
        if (ds.norm() <= 1e-13 * (1.0 + s.norm()) || gain <= 1e-16 * (1.0 + phi)) return s;
        break;
      }
      nu *= 4.0;
      if (nu > 1e16) break;
    }
    if (!accepted) break;
  }
  (void)n;
  return s;
}

// Gauss-Newton projection onto F(s) = T along minimal-norm corrections.
Vec project_feasible(const EndpointModel& model, const Vec& target, Vec s, double tol) {
  Vec F;
  Mat J;
  for (int it = 0; it < 30; ++it) {
    model.evaluate(s, F, &J);
    Vec r = F - target;
    if (r.cwiseAbs().maxCoeff() <= tol) break;
    // pseudo-inverse: J loses rank where higher brackets are needed
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(J * J.transpose());
    cod.setThreshold(1e-12);
    Vec ds = -J.transpose() * cod.solve(r);
    if (!ds.allFinite()) break;
    double step = 1.0;
    bool improved = false;
    for (int k = 0; k < 20 && !improved; ++k) {
      Vec Ft;
      model.evaluate(s + step * ds, Ft, nullptr);
      if ((Ft - target).norm() < r.norm()) improved = true;
      else step *= 0.5;
    }
    if (!improved) break;
    s += step * ds;
  }
  return s;
}

// Newton on the KKT system of min s^T D s s.t. F(s) = T.
bool kkt_polish(const EndpointModel& model, const Vec& target, const Vec& d, Vec& s, Vec lambda, double tol) {
  const int p = model.num_params();
  const int n = model.num_outputs();
  Vec F;
  Mat J;
  auto kkt_residual = [&](const Vec& ss, const Vec& lam) {
    Vec f;
    Mat j;
    model.evaluate(ss, f, &j);
    Vec g = 2.0 * d.cwiseProduct(ss) + j.transpose() * lam;
    return std::max(g.cwiseAbs().maxCoeff(), (f - target).cwiseAbs().maxCoeff());
  };
  double res = kkt_residual(s, lambda);
  for (int it = 0; it < 25 && res > 1e-13 * (1.0 + s.norm()); ++it) {
    model.evaluate(s, F, &J);
    Mat K = Mat::Zero(p + n, p + n);
    K.topLeftCorner(p, p) = model.lagrangian_hessian(s, lambda);
    K.topLeftCorner(p, p).diagonal() += 2.0 * d;
    K.topRightCorner(p, n) = J.transpose();
    K.bottomLeftCorner(n, p) = J;
    Vec rhs(p + n);
    rhs << -(2.0 * d.cwiseProduct(s) + J.transpose() * lambda), -(F - target);
    Vec step = K.fullPivLu().solve(rhs);
    if (!step.allFinite()) return false;
    Vec s2 = s + step.head(p);
    Vec l2 = lambda + step.tail(n);
    double r2 = kkt_residual(s2, l2);
    if (!(r2 < res)) break;
    s = s2;
    lambda = l2;
    res = r2;
  }
  model.evaluate(s, F, nullptr);
  return (F - target).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

MinNormResult solve_min_norm(const EndpointModel& model, const Vec& target, const Vec& s0, const MinNormOptions& opt) {
  const int p = model.num_params();
  if (s0.size() != p || target.size() != model.num_outputs()) throw SpecError("solve_min_norm: dimension mismatch");
  Vec d = opt.objective_weights.size() ? opt.objective_weights : Vec::Ones(p);
  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  const double tol = opt.feas_tol * scale;

  Vec s = s0;
  double mu = opt.mu0;
  const Vec sq = opt.residual_weights.size() ? Vec(opt.residual_weights.cwiseSqrt()) : Vec::Ones(target.size());
  Vec shift = Vec::Zero(target.size());
  int first_stage = 0;
  if (opt.project_first) {
    // start on the constraint set and stay near it; avoids sliding onto curves where J loses rank
    s = project_feasible(model, target, s, tol);
    first_stage = opt.penalty_stages - 1;
    mu *= std::pow(opt.penalty_growth, first_stage);
  }
  for (int stage = first_stage; stage < opt.penalty_stages; ++stage) {
    Objective obj{model, target, d, sq, mu, Vec::Zero(target.size())};
    s = minimize_penalty(obj, s, opt.inner_iters);
    if (stage + 1 < opt.penalty_stages) mu *= opt.penalty_growth;
  }
  // augmented Lagrangian refinement at the final penalty
  Vec F;
  for (int it = 0; it < opt.al_iters; ++it) {
    model.evaluate(s, F, nullptr);
    if ((F - target).cwiseAbs().maxCoeff() <= tol) break;
    shift += sq.cwiseProduct(F - target);
    Objective obj{model, target, d, sq, mu, shift};
    s = minimize_penalty(obj, s, opt.inner_iters);
  }
  model.evaluate(s, F, nullptr);
  Vec kkt_lambda = 2.0 * mu * sq.cwiseProduct(sq.cwiseProduct(F - target) + shift);

  s = project_feasible(model, target, s, tol);

  if (model.has_hessian()) {
    Vec polished = s;
    double before = s.dot(d.cwiseProduct(s));
    if (kkt_polish(model, target, d, polished, kkt_lambda, tol) &&
        polished.dot(d.cwiseProduct(polished)) <= before * (1.0 + 1e-9) + 1e-14)
      s = polished;
  }

  MinNormResult out;
  model.evaluate(s, F, nullptr);
  out.s = s;
  out.objective = s.dot(d.cwiseProduct(s));
  out.residual = (F - target).cwiseAbs().maxCoeff();
  out.converged = out.residual <= tol;
  return out;
}

LegendreControlBasis::LegendreControlBasis(const SubRiemannianStructure& S, int degree)
    : degree_(degree), k_(S.rank()) {
  if (degree < 0) throw SpecError("control basis: negative degree");
  Eigen::LLT<Mat> llt(S.metric());
  Mat Linv = llt.matrixL().solve(Mat::Identity(k_, k_));
  Linv_t_ = Linv.transpose();
  T_ = S.horizontal() * Linv_t_;
}

double LegendreControlBasis::phi(int a, double t) {
  double x = 2.0 * t - 1.0;
  if (a == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= a; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * a + 1.0) * p1;
}

namespace {

double legendre_p(int a, double x) {
  if (a == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= a; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// int_0^t phi_a
double phi_integral(int a, double t) {
  if (a == 0) return t;
  double x = 2.0 * t - 1.0;
  return std::sqrt(2.0 * a + 1.0) * 0.5 * (legendre_p(a + 1, x) - legendre_p(a - 1, x)) / (2.0 * a + 1.0);
}

}  // namespace

SampledControl LegendreControlBasis::to_control(const Vec& s, Eigen::Index grid) const {
  if (s.size() != num_params()) throw SpecError("control basis: coefficient size mismatch");
  Mat vals(grid, k_);
  for (Eigen::Index j = 0; j < grid; ++j) {
    double t = static_cast<double>(j) / static_cast<double>(grid - 1);
    Vec w = Vec::Zero(k_);
    for (int a = 0; a <= degree_; ++a) w += phi(a, t) * s.segment(a * k_, k_);
    vals.row(j) = (Linv_t_ * w).transpose();
  }
  return SampledControl(vals);
}

Vec LegendreControlBasis::constant(const Vec& w) const {
  Vec s = Vec::Zero(num_params());
  s.head(k_) = Linv_t_.inverse() * w;
  return s;
}

QuadraticEndpointModel::QuadraticEndpointModel(const SubRiemannianStructure& S, int degree)
    : LegendreControlBasis(S, degree), g_(S.algebra_ptr()), n_(S.dim()) {
  if (g_->step() != 2) throw SpecError("quadratic endpoint model needs a 2-step algebra");
  const int nb = degree + 1;
  Vec x, w;
  gauss_legendre(nb + 3, 0.0, 1.0, x, w);
  Mat W = Mat::Zero(nb, nb);
  for (Eigen::Index q = 0; q < x.size(); ++q)
    for (int a = 0; a < nb; ++a) {
      double Pa = phi_integral(a, x(q));
      for (int b = 0; b < nb; ++b) W(a, b) += w(q) * Pa * phi(b, x(q));
    }
  Wa_ = W - W.transpose();
}

void QuadraticEndpointModel::evaluate(const Vec& s, Vec& F, Mat* J) const {
  const int nb = degree_ + 1;
  Mat Y(n_, nb);
  for (int a = 0; a < nb; ++a) Y.col(a) = T_ * s.segment(a * k_, k_);
  F = Y.col(0);
  for (int a = 0; a < nb; ++a)
    for (int b = a + 1; b < nb; ++b)
      if (Wa_(a, b) != 0.0) F += 0.5 * Wa_(a, b) * g_->bracket(Y.col(a), Y.col(b));
  if (!J) return;
  // Br_b column q = [T_q, Y_b] = -ad(Y_b) T_q
  std::vector<Mat> Br(nb);
  for (int b = 0; b < nb; ++b) Br[b] = -ad_matrix(*g_, Y.col(b)) * T_;
  J->setZero(n_, num_params());
  for (int a = 0; a < nb; ++a) {
    Mat blk = Mat::Zero(n_, k_);
    if (a == 0) blk += T_;
    for (int b = 0; b < nb; ++b)
      if (Wa_(a, b) != 0.0) blk += 0.5 * Wa_(a, b) * Br[b];
    J->block(0, a * k_, n_, k_) = blk;
  }
}

Mat QuadraticEndpointModel::lagrangian_hessian(const Vec&, const Vec& lambda) const {
  const int nb = degree_ + 1;
  Mat C(k_, k_);
  for (int p = 0; p < k_; ++p)
    for (int q = 0; q < k_; ++q) C(p, q) = lambda.dot(g_->bracket(T_.col(p), T_.col(q)));
  Mat Hs(num_params(), num_params());
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < nb; ++b) Hs.block(a * k_, b * k_, k_, k_) = 0.5 * Wa_(a, b) * C;
  return Hs;
}

ProductEndpointModel::ProductEndpointModel(const SubRiemannianStructure& S, int degree, int panels)
    : LegendreControlBasis(S, degree), g_(S.algebra_ptr()), n_(S.dim()), panels_(panels) {
  if (panels < 1) throw SpecError("product endpoint model: need at least one panel");
  basis_at_nodes_.resize(2 * panels + 1, degree + 1);
  for (int j = 0; j <= 2 * panels; ++j)
    for (int a = 0; a <= degree; ++a) basis_at_nodes_(j, a) = phi(a, j / (2.0 * panels));
}

void ProductEndpointModel::evaluate(const Vec& s, Vec& F, Mat* J) const {
  const int nb = degree_ + 1;
  const int p = num_params();
  Mat Smat = Eigen::Map<const Mat>(s.data(), k_, nb);
  Mat Y = T_ * Smat * basis_at_nodes_.transpose();  // n x nodes
  const double H = 1.0 / panels_;
  const bool step3 = g_->step() >= 3;
  Vec gamma = Vec::Zero(n_);
  Mat G;
  if (J) G = Mat::Zero(n_, p);
  for (int c = 0; c < panels_; ++c) {
    const int j0 = 2 * c;
    Vec y0 = Y.col(j0), y1 = Y.col(j0 + 1), y2 = Y.col(j0 + 2);
    Vec dy = y2 - y0;
    Vec omega = (H / 6.0) * (y0 + 4.0 * y1 + y2) + (H * H / 12.0) * g_->bracket(y1, dy);
    if (J) {
      // d omega / d s_{a,q} = c1_a T_q + (H^2/12) (phi_a(t1) [T_q, dy] + (phi_a(t2) - phi_a(t0)) [y1, T_q])
      Mat TB = -ad_matrix(*g_, dy) * T_;  // [T_q, dy]
      Mat YT = ad_matrix(*g_, y1) * T_;   // [y1, T_q]
      Mat dOmega(n_, p);
      for (int a = 0; a < nb; ++a) {
        double f0 = basis_at_nodes_(j0, a), f1 = basis_at_nodes_(j0 + 1, a), f2 = basis_at_nodes_(j0 + 2, a);
        dOmega.block(0, a * k_, n_, k_) =
            (H / 6.0) * (f0 + 4.0 * f1 + f2) * T_ + (H * H / 12.0) * (f1 * TB + (f2 - f0) * YT);
      }
      Mat adx = ad_matrix(*g_, gamma);
      Mat ady = ad_matrix(*g_, omega);
      Mat I = Mat::Identity(n_, n_);
      Mat D1 = I - 0.5 * ady;
      Mat D2 = I + 0.5 * adx;
      if (step3) {
        Mat adxy = ad_matrix(*g_, g_->bracket(gamma, omega));
        D1 += (-adxy - adx * ady + ady * ady) / 12.0;
        D2 += (adx * adx + adxy - ady * adx) / 12.0;
      }
      G = D1 * G + D2 * dOmega;
    }
    gamma = multiply(*g_, gamma, omega);
  }
  F = gamma;
  if (J) *J = G;
}

}  // namespace nilgeo
