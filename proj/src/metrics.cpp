#include "nilgeo/metrics.hpp"

#include "nilgeo/optimizer.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>

namespace nilgeo {

namespace {

// minimal-energy constant control reaching the abelian part of the target
Vec line_preimage(const SubRiemannianStructure& S, const Vec& target) {
  Mat A = S.abelian_block();
  Vec xi = abelian_projection(S.algebra(), target);
  return S.metric().ldlt().solve(A.transpose() * (S.abelian_gram() * xi));
}

double rough_energy(const SubRiemannianStructure& S, const Vec& target) {
  double e = std::pow(distance_lower(S, target), 2);
  for (int k : S.algebra().derived_indices()) e += 4.0 * kPi * std::abs(target(k));
  return std::max(e, 1e-8);
}

Vec endpoint_any(const SubRiemannianStructure& S, const SampledControl& u) {
  return S.algebra().step() == 2 ? endpoint_step2(S, u) : endpoint_product(S, u);
}

// Geodesic family t -> e^{tM} w + zeta, parameters [upper triangle of M, w, zeta].
class ShootingModel : public EndpointModel {
 public:
  explicit ShootingModel(const SubRiemannianStructure& S)
      : g_(S.algebra_ptr()),
        HV_(S.horizontal() * S.v_orthonormal()),
        HD_(S.horizontal() * S.drift_basis()),
        dv_(static_cast<int>(S.v_orthonormal().cols())),
        dr_(static_cast<int>(S.drift_basis().cols())) {}

  int num_skew() const { return dv_ * (dv_ - 1) / 2; }
  int num_params() const override { return num_skew() + dv_ + dr_; }
  int num_outputs() const override { return g_->dim(); }

  Mat skew_of(const Vec& s) const {
    Mat M = Mat::Zero(dv_, dv_);
    int c = 0;
    for (int i = 0; i < dv_; ++i)
      for (int j = i + 1; j < dv_; ++j) {
        M(i, j) = s(c);
        M(j, i) = -s(c);
        ++c;
      }
    return M;
  }
  Vec velocity_of(const Vec& s) const { return s.segment(num_skew(), dv_); }
  Vec drift_of(const Vec& s) const { return s.tail(dr_); }

  Vec endpoint(const Vec& s) const {
    const int nodes = 257;
    const double h = 1.0 / (nodes - 1);
    Mat A = Mat::Zero(dv_ + 1, dv_ + 1);
    A.topLeftCorner(dv_, dv_) = skew_of(s);
    A.topRightCorner(dv_, 1) = velocity_of(s);
    const Mat step = (h * A).exp();
    Mat E = Mat::Identity(dv_ + 1, dv_ + 1);
    const Vec w = velocity_of(s);
    Vec vert = Vec::Zero(g_->dim());
    Vec X;
    for (int j = 0; j < nodes; ++j) {
      double c = (j == 0 || j == nodes - 1) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      X = HV_ * E.topRightCorner(dv_, 1);
      Vec dX = HV_ * (E.topLeftCorner(dv_, dv_) * w);
      vert += (c * h / 3.0) * g_->bracket(X, dX);
      E = E * step;
    }
    return X + 0.5 * vert + HD_ * drift_of(s);
  }

  void evaluate(const Vec& s, Vec& F, Mat* J) const override {
    F = endpoint(s);
    if (!J) return;
    J->resize(num_outputs(), num_params());
    for (int i = 0; i < num_params(); ++i) {
      double h = 1e-6 * (1.0 + std::abs(s(i)));
      Vec sp = s, sm = s;
      sp(i) += h;
      sm(i) -= h;
      J->col(i) = (endpoint(sp) - endpoint(sm)) / (2.0 * h);
    }
  }

  Vec objective_weights() const {
    Vec d = Vec::Ones(num_params());
    d.head(num_skew()).setConstant(1e-8);  // keeps M from drifting along flat directions
    return d;
  }

 private:
  std::shared_ptr<const NilpotentAlgebra> g_;
  Mat HV_;
  Mat HD_;
  int dv_;
  int dr_;
};

struct ExactOracle {
  bool riemannian = false;
  int i = 0, j = 0, k = 0;
  Mat R;             // (a, b) = R (p_i, p_j)
  double zscale = 1;  // z' = zscale * z
  std::vector<int> E;
  Mat GE;
  Vec Lrow;  // sub-Riemannian graph correction: z_adj = p_k - Lrow . pi_ab(p)
};

std::optional<ExactOracle> recognize(const SubRiemannianStructure& S) {
  const auto& g = S.algebra();
  if (g.step() != 2 || g.terms().size() != 1) return std::nullopt;
  const auto& t = g.terms()[0];
  const int n = g.dim();
  ExactOracle o;
  o.i = t.i;
  o.j = t.j;
  o.k = t.k;
  for (int q = 0; q < n; ++q)
    if (q != t.i && q != t.j && q != t.k) o.E.push_back(q);

  auto split = [&](const Mat& G, const std::vector<int>& order) -> bool {
    // G is a metric on coordinates listed in `order`; requires the (i,j) block orthogonal to E.
    auto pos = [&](int q) {
      for (size_t r = 0; r < order.size(); ++r)
        if (order[r] == q) return static_cast<int>(r);
      return -1;
    };
    int pi = pos(t.i), pj = pos(t.j);
    double scale = G.cwiseAbs().maxCoeff();
    Mat Gh(2, 2);
    Gh << G(pi, pi), G(pi, pj), G(pj, pi), G(pj, pj);
    o.GE = Mat(o.E.size(), o.E.size());
    for (size_t a = 0; a < o.E.size(); ++a) {
      int pa = pos(o.E[a]);
      if (std::abs(G(pa, pi)) > 1e-12 * scale || std::abs(G(pa, pj)) > 1e-12 * scale) return false;
      for (size_t b = 0; b < o.E.size(); ++b) o.GE(a, b) = G(pa, pos(o.E[b]));
    }
    Eigen::LLT<Mat> llt(Gh);
    o.R = llt.matrixL().transpose();
    double detF = 1.0 / o.R.determinant();
    o.zscale = 1.0 / (t.coeff * detF);
    return true;
  };

  if (S.rank() == n) {
    Mat Hinv = S.horizontal().inverse();
    Mat G = Hinv.transpose() * S.metric() * Hinv;
    std::vector<int> order(n);
    for (int q = 0; q < n; ++q) order[q] = q;
    double scale = G.cwiseAbs().maxCoeff();
    for (int q = 0; q < n; ++q)
      if (q != t.k && std::abs(G(t.k, q)) > 1e-12 * scale) return std::nullopt;
    if (!split(G, order)) return std::nullopt;
    // the unit vertical vector of the model group must have unit length
    if (std::abs(std::sqrt(G(t.k, t.k)) / std::abs(o.zscale) - 1.0) > 1e-10) return std::nullopt;
    o.riemannian = true;
    return o;
  }
  if (S.is_carnot() && S.rank() == n - 1 && g.derived_indices().size() == 1) {
    const auto& comp = g.complement_indices();
    if (!split(S.abelian_gram(), comp)) return std::nullopt;
    Mat A = S.abelian_block();
    Mat HA = S.horizontal() * A.inverse();
    o.Lrow = HA.row(t.k).transpose();
    return o;
  }
  return std::nullopt;
}

}  // namespace

double distance_lower(const SubRiemannianStructure& S, const Vec& target) {
  if (target.size() != S.dim()) throw SpecError("distance: target dimension mismatch");
  return abelianization_norm(S, abelian_projection(S.algebra(), target));
}

DistanceEstimate distance_upper(const SubRiemannianStructure& S, const Vec& target, const Budget& budget) {
  DistanceEstimate est;
  est.target = target;
  est.lower = distance_lower(S, target);
  est.methods.push_back("abelianization-lower");
  if (target.cwiseAbs().maxCoeff() == 0.0) {
    est.upper = 0.0;
    est.witness = SampledControl::zero(S.rank(), budget.grid);
    est.methods.push_back("trivial");
    return est;
  }

  std::unique_ptr<EndpointModel> model;
  const LegendreControlBasis* basis = nullptr;
  if (S.algebra().step() == 2) {
    auto m = std::make_unique<QuadraticEndpointModel>(S, budget.modes);
    basis = m.get();
    model = std::move(m);
  } else {
    auto m = std::make_unique<ProductEndpointModel>(S, budget.modes, budget.panels);
    basis = m.get();
    model = std::move(m);
  }
  const int p = model->num_params();
  const double e_est = rough_energy(S, target);
  const double tscale = std::max(target.squaredNorm(), 1e-12);
  const Vec s_line = basis->constant(line_preimage(S, target));
  const double feas = budget.feas_tol * std::max(1.0, target.cwiseAbs().maxCoeff());

  MinNormOptions opt;
  opt.penalty_stages = budget.penalty_stages;
  opt.mu0 = e_est / tscale;
  // tiny coordinates must not be traded for energy: weight each residual by its target size
  const double big = target.cwiseAbs().maxCoeff();
  opt.residual_weights = target.cwiseAbs().cwiseMax(1e-3 * big).cwiseInverse().array().square().matrix() * big * big;

  double best = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  for (int st = 0; st < budget.starts; ++st) {
    Rng rng(derive_seed(budget.seed, static_cast<std::uint64_t>(st)));
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    Vec s0 = s_line;
    if (st > 0) s0 += gaussian_vector(rng, p, std::sqrt(e_est / p) * unif(rng));
    MinNormOptions o = opt;
    o.project_first = st % 2 == 1;
    MinNormResult r = solve_min_norm(*model, target, s0, o);
    SampledControl u = basis->to_control(r.s, budget.grid);
    double residual = (endpoint_any(S, u) - target).cwiseAbs().maxCoeff();
    best_residual = std::min(best_residual, residual);
    if (residual > feas) continue;
    if (r.objective < best * (1.0 - 1e-12)) {
      best = r.objective;
      est.best_start = st;
      est.witness = u;
      est.coefficients = r.s;
      est.residual = residual;
    }
  }
  if (est.best_start < 0) throw Infeasible("distance_upper: no feasible control within budget", best_residual);
  est.upper = std::max(std::sqrt(best), est.lower);
  est.methods.push_back(S.algebra().step() == 2 ? "legendre-quadratic" : "legendre-product");
  return est;
}

DistanceEstimate distance_shooting(const SubRiemannianStructure& S, const Vec& target, const Budget& budget) {
  if (S.algebra().step() != 2) throw SpecError("distance_shooting: algebra is not 2-step");
  if (target.size() != S.dim()) throw SpecError("distance: target dimension mismatch");
  DistanceEstimate est;
  est.target = target;
  est.lower = distance_lower(S, target);
  est.methods.push_back("abelianization-lower");

  ShootingModel model(S);
  const int p = model.num_params();
  const int ns = model.num_skew();
  const Vec wline = line_preimage(S, target);
  Vec s_line = Vec::Zero(p);
  s_line.segment(ns, S.v_orthonormal().cols()) = S.v_orthonormal().transpose() * S.metric() * wline;
  s_line.tail(S.drift_basis().cols()) = S.drift_basis().transpose() * S.metric() * wline;
  const double e_est = rough_energy(S, target);
  const double feas = budget.feas_tol * std::max(1.0, target.cwiseAbs().maxCoeff());

  MinNormOptions opt;
  opt.objective_weights = model.objective_weights();
  opt.penalty_stages = budget.penalty_stages;
  opt.mu0 = e_est / std::max(target.squaredNorm(), 1e-12);

  double best = std::numeric_limits<double>::infinity();
  for (int st = 0; st < budget.starts; ++st) {
    Rng rng(derive_seed(budget.seed ^ 0x5deece66dULL, static_cast<std::uint64_t>(st)));
    Vec s0 = s_line;
    if (st > 0) {
      s0.head(ns) = gaussian_vector(rng, ns, 2.0 * kPi);
      s0.tail(p - ns) += gaussian_vector(rng, p - ns, std::sqrt(e_est / (p - ns)));
    }
    MinNormResult r = solve_min_norm(model, target, s0, opt);
    if (!r.s.allFinite()) continue;
    Vec zeta = S.drift_basis() * model.drift_of(r.s);
    NormalGeodesicParams gp = params_from_velocity(model.skew_of(r.s), model.velocity_of(r.s), zeta);
    // runaway rotation rates are not resolvable on the grid
    if (gp.M.cwiseAbs().maxCoeff() * 1e-2 > static_cast<double>(budget.grid)) continue;
    SampledControl u;
    try {
      u = normal_geodesic_control(S, gp, budget.grid);
    } catch (const SpecError&) {
      continue;
    }
    double residual = (endpoint_step2(S, u) - target).cwiseAbs().maxCoeff();
    if (residual > feas) continue;
    double e = energy(S, u);
    if (e < best * (1.0 - 1e-12)) {
      best = e;
      est.best_start = st;
      est.geodesic = gp;
      est.witness = u;
      est.coefficients = r.s;
      est.residual = residual;
    }
  }
  if (est.best_start < 0) {
    DistanceEstimate fb = distance_upper(S, target, budget);
    fb.methods.push_back("shooting-fallback");
    return fb;
  }
  est.upper = std::max(std::sqrt(best), est.lower);
  est.methods.push_back("geodesic-shooting");
  return est;
}

DistanceEstimate asymptotic_distance(const SubRiemannianStructure& S, const Vec& target, const Budget& budget) {
  SubRiemannianStructure Sinf = asymptotic_structure(S);
  DistanceEstimate est = distance_upper(Sinf, target, budget);
  if (Sinf.algebra().step() == 2) {
    DistanceEstimate sh = distance_shooting(Sinf, target, budget);
    if (sh.upper < est.upper) est = sh;
  }
  est.lower = std::max(est.lower, distance_lower(S, target));
  est.methods.push_back("asymptotic-structure");
  return est;
}

std::optional<Interval> exact_distance(const SubRiemannianStructure& S, const Vec& target) {
  if (target.size() != S.dim()) throw SpecError("distance: target dimension mismatch");
  auto o = recognize(S);
  if (!o) return std::nullopt;
  Vec ab(2);
  ab << target(o->i), target(o->j);
  Vec planar = o->R * ab;
  double z = target(o->k);
  if (!o->riemannian) z -= o->Lrow.dot(abelian_projection(S.algebra(), target));
  Vec h(3);
  h << planar(0), planar(1), o->zscale * z;
  double e2 = 0.0;
  if (!o->E.empty()) {
    Vec xe(o->E.size());
    for (size_t a = 0; a < o->E.size(); ++a) xe(a) = target(o->E[a]);
    e2 = xe.dot(o->GE * xe);
  }
  Interval dh = o->riemannian ? heisenberg_riemannian_distance(h) : Interval{heisenberg_sr_distance(h), 0.0};
  if (!o->riemannian) dh.hi = dh.lo;
  double pad = 1e-12 * (1.0 + dh.hi);
  return Interval{std::sqrt(dh.lo * dh.lo + e2) - pad, std::sqrt(dh.hi * dh.hi + e2) + pad};
}

bool has_exact_oracle(const SubRiemannianStructure& S) { return recognize(S).has_value(); }

DistanceEstimate distance_bracket(const SubRiemannianStructure& S, const Vec& target, const Budget& budget) {
  if (auto iv = exact_distance(S, target)) {
    DistanceEstimate est;
    est.target = target;
    est.lower = std::max(iv->lo, 0.0);
    est.upper = iv->hi;
    est.exact = true;
    est.methods.push_back("exact");
    return est;
  }
  return distance_upper(S, target, budget);
}

}  // namespace nilgeo
