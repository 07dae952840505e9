#pragma once

#include "nilgeo/core.hpp"

#include <memory>
#include <string>
#include <vector>

namespace nilgeo {

// [e_i, e_j] has component `coeff` along e_k. Stored with i < j.
struct BracketTerm {
  int i;
  int j;
  int k;
  double coeff;
};

// Nilpotent Lie algebra of step 2 or 3 given by structure constants.
// The derived algebra [g,g] must be spanned by a subset of basis vectors.
class NilpotentAlgebra {
 public:
  NilpotentAlgebra(std::vector<std::string> basis_names, int step, std::vector<BracketTerm> terms);

  int dim() const { return static_cast<int>(names_.size()); }
  int step() const { return step_; }
  const std::vector<std::string>& basis_names() const { return names_; }
  const std::vector<BracketTerm>& terms() const { return terms_; }

  const std::vector<int>& derived_indices() const { return derived_; }
  const std::vector<int>& complement_indices() const { return complement_; }
  int derived_dim() const { return static_cast<int>(derived_.size()); }
  // 1 on the complement, 2 on [g,g] minus [g,[g,g]], 3 on [g,[g,g]]
  const std::vector<int>& weights() const { return weights_; }

  template <typename DX, typename DY>
  Eigen::Matrix<typename Eigen::ScalarBinaryOpTraits<typename DX::Scalar, typename DY::Scalar>::ReturnType,
                Eigen::Dynamic, 1>
  bracket(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) const {
    using S = typename Eigen::ScalarBinaryOpTraits<typename DX::Scalar, typename DY::Scalar>::ReturnType;
    if (x.size() != dim() || y.size() != dim()) throw SpecError("bracket: dimension mismatch");
    Eigen::Matrix<S, Eigen::Dynamic, 1> r = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(dim());
    for (const auto& t : terms_) r(t.k) += t.coeff * (x(t.i) * y(t.j) - x(t.j) * y(t.i));
    return r;
  }

  Vec structure_vector(int i, int j) const;

  // sum of dims of the lower central series: homogeneous dimension of the graded algebra
  int graded_dimension() const;

 private:
  void validate() const;

  std::vector<std::string> names_;
  int step_;
  std::vector<BracketTerm> terms_;
  std::vector<int> derived_;
  std::vector<int> complement_;
  std::vector<int> weights_;
};

// Group law in exponential coordinates (truncated BCH, exact for step <= 3).
template <typename DX, typename DY>
Eigen::Matrix<typename DX::Scalar, Eigen::Dynamic, 1> multiply(const NilpotentAlgebra& g,
                                                                 const Eigen::MatrixBase<DX>& p,
                                                                 const Eigen::MatrixBase<DY>& q) {
  using V = Eigen::Matrix<typename DX::Scalar, Eigen::Dynamic, 1>;
  V pq = g.bracket(p, q);
  V r = p + q + 0.5 * pq;
  if (g.step() >= 3) {
    V a = g.bracket(p, pq);
    V b = g.bracket(q, pq);
    r += (a - b) / 12.0;
  }
  return r;
}

// Matrix of x -> [a, x].
Mat ad_matrix(const NilpotentAlgebra& g, const Vec& a);

inline Vec inverse(const NilpotentAlgebra&, const Vec& p) { return -p; }

// Horizontal subspace with an inner product, plus the derived subspaces used throughout.
class SubRiemannianStructure {
 public:
  SubRiemannianStructure(std::shared_ptr<const NilpotentAlgebra> algebra, Mat horizontal, Mat metric);

  const NilpotentAlgebra& algebra() const { return *algebra_; }
  const std::shared_ptr<const NilpotentAlgebra>& algebra_ptr() const { return algebra_; }
  int dim() const { return algebra_->dim(); }
  int rank() const { return static_cast<int>(horizontal_.cols()); }

  const Mat& horizontal() const { return horizontal_; }  // dim x k
  const Mat& metric() const { return metric_; }          // k x k

  // Delta-coordinate bases
  const Mat& drift_basis() const { return drift_; }  // spans Delta ∩ [g,g], rho-orthonormal
  const Mat& v_basis() const { return vbasis_; }     // spans V, built from projected coordinate vectors
  const Mat& v_orthonormal() const { return vortho_; }
  const Mat& v_projector() const { return vproj_; }  // projection onto V along the drift

  // rows of the horizontal basis on the complement coordinates: the abelianization of Delta
  Mat abelian_block() const;
  const Mat& abelian_gram() const { return abgram_; }

  int homogeneous_dimension() const;
  bool is_carnot() const { return drift_.cols() == 0; }

  Vec to_algebra(const Vec& w) const { return horizontal_ * w; }

 private:
  std::shared_ptr<const NilpotentAlgebra> algebra_;
  Mat horizontal_;
  Mat metric_;
  Mat drift_;
  Mat vbasis_;
  Mat vortho_;
  Mat vproj_;
  Mat abgram_;
};

SubRiemannianStructure asymptotic_structure(const SubRiemannianStructure& S);

Vec abelian_projection(const NilpotentAlgebra& g, const Vec& p);
double abelianization_norm(const SubRiemannianStructure& S, const Vec& xi);

struct Automorphism {
  Mat matrix;
  Vec apply(const Vec& p) const { return matrix * p; }
};

// Throws SpecError unless M is invertible and respects the bracket.
Automorphism make_automorphism(const NilpotentAlgebra& g, const Mat& M, double tol = 1e-9);

// L maps complement coordinates to derived coordinates (rows: derived_indices order).
Automorphism shear_automorphism(const SubRiemannianStructure& S, const Mat& L);

Automorphism graph_isometry(const SubRiemannianStructure& S, const SubRiemannianStructure& S2,
                            double tol = 1e-8);

// Dilation by coordinate weights (exact automorphism when the algebra is graded that way).
Vec dilate(const NilpotentAlgebra& g, const Vec& p, double lambda);

}  // namespace nilgeo
