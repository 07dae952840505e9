#pragma once

#include "nilgeo/controls.hpp"

namespace nilgeo {

// Smooth map F: R^p -> R^n with Jacobian; the solver minimizes sum_i d_i s_i^2 subject to F(s) = target.
class EndpointModel {
 public:
  virtual ~EndpointModel() = default;
  virtual int num_params() const = 0;
  virtual int num_outputs() const = 0;
  virtual void evaluate(const Vec& s, Vec& F, Mat* J) const = 0;
  virtual bool has_hessian() const { return false; }
  // sum_i lambda_i * Hessian(F_i)
  virtual Mat lagrangian_hessian(const Vec& s, const Vec& lambda) const;
};

struct MinNormOptions {
  Vec objective_weights;  // empty means all ones
  Vec residual_weights;   // per-output penalty weights, empty means all ones
  int penalty_stages = 6;
  double penalty_growth = 10.0;
  double mu0 = 1.0;
  int inner_iters = 200;
  int al_iters = 40;
  double feas_tol = 1e-11;
  bool project_first = false;  // Gauss-Newton onto F = T before the penalty stages
};

struct MinNormResult {
  Vec s;
  double objective = 0.0;
  double residual = 0.0;  // sup norm of F(s) - target
  bool converged = false;
};

MinNormResult solve_min_norm(const EndpointModel& model, const Vec& target, const Vec& s0,
                             const MinNormOptions& opt = {});

// Controls u(t) = L^{-T} sum_a phi_a(t) s_a with phi_a the orthonormal shifted Legendre polynomials,
// rho = L L^T. Then energy(u) = |s|^2 exactly.
class LegendreControlBasis {
 public:
  LegendreControlBasis(const SubRiemannianStructure& S, int degree);
  int degree() const { return degree_; }
  int rank() const { return k_; }
  int num_params() const { return k_ * (degree_ + 1); }
  static double phi(int a, double t);
  Mat whitening() const { return Linv_t_; }  // L^{-T}
  SampledControl to_control(const Vec& s, Eigen::Index grid) const;
  // coefficients of a constant control w (Delta coordinates)
  Vec constant(const Vec& w) const;

 protected:
  int degree_;
  int k_;
  Mat Linv_t_;
  Mat T_;  // H L^{-T}
};

// Exact closed form of the 2-step endpoint in Legendre coefficients.
class QuadraticEndpointModel : public EndpointModel, public LegendreControlBasis {
 public:
  QuadraticEndpointModel(const SubRiemannianStructure& S, int degree);
  int num_params() const override { return LegendreControlBasis::num_params(); }
  int num_outputs() const override { return n_; }
  void evaluate(const Vec& s, Vec& F, Mat* J) const override;
  bool has_hessian() const override { return true; }
  Mat lagrangian_hessian(const Vec& s, const Vec& lambda) const override;

 private:
  std::shared_ptr<const NilpotentAlgebra> g_;
  int n_;
  Mat Wa_;  // W - W^T with W_ab = int Phi_a phi_b
};

// Any step: fourth-order Magnus panels composed with the exact group law, with forward sensitivities.
class ProductEndpointModel : public EndpointModel, public LegendreControlBasis {
 public:
  ProductEndpointModel(const SubRiemannianStructure& S, int degree, int panels);
  int num_params() const override { return LegendreControlBasis::num_params(); }
  int num_outputs() const override { return n_; }
  void evaluate(const Vec& s, Vec& F, Mat* J) const override;

 private:
  std::shared_ptr<const NilpotentAlgebra> g_;
  int n_;
  int panels_;
  Mat basis_at_nodes_;  // (2*panels+1) x (degree+1)
};

}  // namespace nilgeo
