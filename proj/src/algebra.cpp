#include "nilgeo/algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace nilgeo {

namespace {

constexpr double kRankTol = 1e-10;

int numeric_rank(const Mat& A) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankTol * s(0)) ++r;
  return r;
}

// Indices supporting the span of the columns of B; throws if that span is not a coordinate subspace.
std::vector<int> coordinate_support(const Mat& B, const char* what) {
  std::vector<int> idx;
  if (B.cols() == 0) return idx;
  double scale = B.cwiseAbs().maxCoeff();
  for (Eigen::Index r = 0; r < B.rows(); ++r)
    if (B.row(r).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) idx.push_back(static_cast<int>(r));
  if (numeric_rank(B) != static_cast<int>(idx.size())) {
    std::ostringstream os;
    os << what << " is not spanned by basis vectors";
    throw SpecError(os.str());
  }
  return idx;
}

Vec unit(int n, int i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

}  // namespace

NilpotentAlgebra::NilpotentAlgebra(std::vector<std::string> basis_names, int step,
                                   std::vector<BracketTerm> terms)
    : names_(std::move(basis_names)), step_(step) {
  const int n = dim();
  if (n <= 0) throw SpecError("algebra: empty basis");
  if (step_ != 2 && step_ != 3) throw SpecError("algebra: step must be 2 or 3");

  std::map<std::tuple<int, int, int>, double> table;
  for (auto t : terms) {
    if (t.i < 0 || t.j < 0 || t.k < 0 || t.i >= n || t.j >= n || t.k >= n)
      throw SpecError("algebra: bracket index out of range");
    if (!std::isfinite(t.coeff)) throw SpecError("algebra: non-finite structure constant");
    if (t.coeff == 0.0) continue;
    if (t.i == t.j) {
      std::ostringstream os;
      os << "antisymmetry violated: [" << names_[t.i] << "," << names_[t.j] << "] != 0";
      throw SpecError(os.str());
    }
    if (t.i > t.j) {
      std::swap(t.i, t.j);
      t.coeff = -t.coeff;
    }
    auto key = std::make_tuple(t.i, t.j, t.k);
    auto it = table.find(key);
    if (it != table.end()) {
      if (std::abs(it->second - t.coeff) > 1e-12 * std::max(1.0, std::abs(t.coeff))) {
        std::ostringstream os;
        os << "antisymmetry violated: [" << names_[t.i] << "," << names_[t.j] << "] given twice with "
           << "inconsistent component along " << names_[t.k];
        throw SpecError(os.str());
      }
      continue;
    }
    table[key] = t.coeff;
  }
  for (const auto& [key, c] : table) terms_.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), c});

  validate();

  Mat B(n, n * (n - 1) / 2);
  int col = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) B.col(col++) = structure_vector(i, j);
  derived_ = coordinate_support(B, "derived algebra [g,g]");
  std::set<int> d(derived_.begin(), derived_.end());
  for (int i = 0; i < n; ++i)
    if (!d.count(i)) complement_.push_back(i);

  Mat B3(n, n * static_cast<int>(derived_.size()));
  col = 0;
  for (int i = 0; i < n; ++i)
    for (int k : derived_) B3.col(col++) = bracket(unit(n, i), unit(n, k));
  std::vector<int> third = coordinate_support(B3, "third term of the lower central series");
  weights_.assign(n, 1);
  for (int k : derived_) weights_[k] = 2;
  for (int k : third) weights_[k] = 3;
}

Vec NilpotentAlgebra::structure_vector(int i, int j) const {
  const int n = dim();
  return bracket(unit(n, i), unit(n, j));
}

void NilpotentAlgebra::validate() const {
  const int n = dim();
  double scale = 1.0;
  for (const auto& t : terms_) scale = std::max(scale, std::abs(t.coeff));
  const double tol = 1e-12 * scale * scale * scale;
  std::vector<Vec> e;
  for (int i = 0; i < n; ++i) e.push_back(unit(n, i));

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Vec jac = bracket(e[i], bracket(e[j], e[k])) + bracket(e[j], bracket(e[k], e[i])) +
                  bracket(e[k], bracket(e[i], e[j]));
        if (jac.cwiseAbs().maxCoeff() > tol) {
          std::ostringstream os;
          os << "Jacobi identity violated on (" << names_[i] << "," << names_[j] << "," << names_[k] << ")";
          throw SpecError(os.str());
        }
      }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec inner = bracket(e[j], e[k]);
        if (step_ == 2) {
          if (bracket(e[i], inner).cwiseAbs().maxCoeff() > tol) {
            std::ostringstream os;
            os << "not 2-step nilpotent: [" << names_[i] << ",[" << names_[j] << "," << names_[k] << "]] != 0";
            throw SpecError(os.str());
          }
        } else {
          for (int l = 0; l < n; ++l)
            if (bracket(e[l], bracket(e[i], inner)).cwiseAbs().maxCoeff() > tol * scale) {
              std::ostringstream os;
              os << "not 3-step nilpotent: [" << names_[l] << ",[" << names_[i] << ",[" << names_[j] << ","
                 << names_[k] << "]]] != 0";
              throw SpecError(os.str());
            }
        }
      }
}

int NilpotentAlgebra::graded_dimension() const {
  int q = 0;
  for (int w : weights_) q += w;
  return q;
}

Mat ad_matrix(const NilpotentAlgebra& g, const Vec& a) {
  Mat A = Mat::Zero(g.dim(), g.dim());
  for (const auto& t : g.terms()) {
    A(t.k, t.j) += t.coeff * a(t.i);
    A(t.k, t.i) -= t.coeff * a(t.j);
  }
  return A;
}

SubRiemannianStructure::SubRiemannianStructure(std::shared_ptr<const NilpotentAlgebra> algebra, Mat horizontal,
                                               Mat metric)
    : algebra_(std::move(algebra)), horizontal_(std::move(horizontal)), metric_(std::move(metric)) {
  if (!algebra_) throw SpecError("structure: missing algebra");
  const int n = algebra_->dim();
  const int k = static_cast<int>(horizontal_.cols());
  if (horizontal_.rows() != n || k == 0) throw SpecError("structure: horizontal basis has wrong shape");
  if (metric_.rows() != k || metric_.cols() != k) throw SpecError("structure: metric has wrong shape");
  if (!horizontal_.allFinite() || !metric_.allFinite()) throw SpecError("structure: non-finite entries");
  if (numeric_rank(horizontal_) != k) throw SpecError("structure: horizontal basis is linearly dependent");
  double mscale = std::max(1.0, metric_.cwiseAbs().maxCoeff());
  if ((metric_ - metric_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * mscale)
    throw SpecError("structure: metric is not symmetric");
  metric_ = 0.5 * (metric_ + metric_.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> mes(metric_);
  if (mes.eigenvalues().minCoeff() <= 1e-12 * mscale) throw SpecError("structure: metric is not positive definite");

  Mat A = abelian_block();
  if (numeric_rank(A) != static_cast<int>(A.rows()))
    throw SpecError("structure: horizontal space does not generate the algebra (Delta + [g,g] != g)");

  // Delta ∩ [g,g] = kernel of the abelianization restricted to Delta
  Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A);
  const Vec& ev = es.eigenvalues();
  double emax = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<int> null;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) <= kRankTol * emax) null.push_back(static_cast<int>(i));
  Mat N(k, null.size());
  for (size_t i = 0; i < null.size(); ++i) N.col(i) = es.eigenvectors().col(null[i]);
  if (N.cols() > 0) {
    Mat G = N.transpose() * metric_ * N;
    Eigen::LLT<Mat> llt(G);
    drift_ = llt.matrixL().solve(N.transpose()).transpose();
  } else {
    drift_ = Mat(k, 0);
  }

  vproj_ = Mat::Identity(k, k) - drift_ * drift_.transpose() * metric_;

  std::vector<Vec> picked;
  Mat acc(k, 0);
  for (int i = 0; i < k && static_cast<int>(picked.size()) < k - drift_.cols(); ++i) {
    Vec c = vproj_.col(i);
    Mat trial(k, acc.cols() + 1);
    trial << acc, c;
    if (c.norm() > 1e-12 && numeric_rank(trial) == trial.cols()) {
      acc = trial;
      picked.push_back(c);
    }
  }
  if (acc.cols() != k - drift_.cols()) throw InvariantViolation("structure: could not build a basis of V");
  for (Eigen::Index c = 0; c < acc.cols(); ++c)
    for (Eigen::Index r = 0; r < acc.rows(); ++r)
      if (std::abs(acc(r, c)) < 1e-15) acc(r, c) = 0.0;
  vbasis_ = acc;

  vortho_ = vbasis_;
  for (Eigen::Index c = 0; c < vortho_.cols(); ++c) {
    for (Eigen::Index p = 0; p < c; ++p) {
      double proj = vortho_.col(p).dot(metric_ * vortho_.col(c));
      vortho_.col(c) -= proj * vortho_.col(p);
    }
    vortho_.col(c) /= std::sqrt(vortho_.col(c).dot(metric_ * vortho_.col(c)));
  }

  abgram_ = (A * metric_.inverse() * A.transpose()).inverse();
  abgram_ = 0.5 * (abgram_ + abgram_.transpose());
}

Mat SubRiemannianStructure::abelian_block() const {
  const auto& comp = algebra_->complement_indices();
  Mat A(comp.size(), horizontal_.cols());
  for (size_t r = 0; r < comp.size(); ++r) A.row(r) = horizontal_.row(comp[r]);
  return A;
}

int SubRiemannianStructure::homogeneous_dimension() const { return algebra_->graded_dimension(); }

SubRiemannianStructure asymptotic_structure(const SubRiemannianStructure& S) {
  if (S.is_carnot()) return S;
  const Mat& B = S.v_basis();
  return SubRiemannianStructure(S.algebra_ptr(), S.horizontal() * B, B.transpose() * S.metric() * B);
}

Vec abelian_projection(const NilpotentAlgebra& g, const Vec& p) {
  if (p.size() != g.dim()) throw SpecError("abelian_projection: dimension mismatch");
  const auto& comp = g.complement_indices();
  Vec xi(comp.size());
  for (size_t i = 0; i < comp.size(); ++i) xi(i) = p(comp[i]);
  return xi;
}

double abelianization_norm(const SubRiemannianStructure& S, const Vec& xi) {
  if (xi.size() != S.abelian_gram().rows()) throw SpecError("abelianization_norm: dimension mismatch");
  double q = xi.dot(S.abelian_gram() * xi);
  if (q < -1e-12 * std::max(1.0, xi.squaredNorm())) throw InvariantViolation("abelianization_norm: negative form");
  return std::sqrt(std::max(q, 0.0));
}

Automorphism make_automorphism(const NilpotentAlgebra& g, const Mat& M, double tol) {
  const int n = g.dim();
  if (M.rows() != n || M.cols() != n) throw SpecError("automorphism: wrong shape");
  if (numeric_rank(M) != n) throw SpecError("automorphism: matrix is singular");
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec lhs = M * g.structure_vector(i, j);
      Vec rhs = g.bracket(M.col(i), M.col(j));
      if ((lhs - rhs).cwiseAbs().maxCoeff() > tol * scale * scale) {
        std::ostringstream os;
        os << "automorphism: bracket not preserved on (" << g.basis_names()[i] << "," << g.basis_names()[j] << ")";
        throw SpecError(os.str());
      }
    }
  return Automorphism{M};
}

Automorphism shear_automorphism(const SubRiemannianStructure& S, const Mat& L) {
  const auto& g = S.algebra();
  const auto& der = g.derived_indices();
  const auto& comp = g.complement_indices();
  if (L.rows() != static_cast<Eigen::Index>(der.size()) || L.cols() != static_cast<Eigen::Index>(comp.size()))
    throw SpecError("shear_automorphism: L has wrong shape");
  Mat M = Mat::Identity(g.dim(), g.dim());
  for (size_t r = 0; r < der.size(); ++r)
    for (size_t c = 0; c < comp.size(); ++c) M(der[r], comp[c]) += L(r, c);
  return make_automorphism(g, M);
}

Automorphism graph_isometry(const SubRiemannianStructure& S, const SubRiemannianStructure& S2, double tol) {
  const auto& g = S.algebra();
  if (S2.algebra().dim() != g.dim() || S2.algebra().derived_indices() != g.derived_indices())
    throw SpecError("graph_isometry: structures live on different algebras");
  const int n = g.dim();
  const int a = static_cast<int>(g.complement_indices().size());
  if (S.rank() != a || S2.rank() != a)
    throw SpecError("graph_isometry: horizontal spaces must be complementary to [g,g]");

  const Mat& G1 = S.abelian_gram();
  const Mat& G2 = S2.abelian_gram();
  double scale = std::max(G1.cwiseAbs().maxCoeff(), G2.cwiseAbs().maxCoeff());
  if ((G1 - G2).cwiseAbs().maxCoeff() > tol * scale)
    throw NoIsometry("graph_isometry: abelianization norms differ");

  Mat A1 = S.abelian_block();
  Mat A2 = S2.abelian_block();
  Mat P = Mat::Zero(a, n);
  for (int i = 0; i < a; ++i) P(i, g.complement_indices()[i]) = 1.0;
  Mat F = Mat::Identity(n, n) + (S2.horizontal() * A2.inverse() - S.horizontal() * A1.inverse()) * P;
  for (Eigen::Index c = 0; c < F.cols(); ++c)
    for (Eigen::Index r = 0; r < F.rows(); ++r)
      if (std::abs(F(r, c)) < 1e-14) F(r, c) = 0.0;

  Mat M = A2.inverse() * A1;
  Mat pushed = M.transpose() * S2.metric() * M;
  if ((pushed - S.metric()).cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, S.metric().cwiseAbs().maxCoeff()))
    throw NoIsometry("graph_isometry: push-forward metric mismatch");
  return make_automorphism(g, F);
}

Vec dilate(const NilpotentAlgebra& g, const Vec& p, double lambda) {
  if (p.size() != g.dim()) throw SpecError("dilate: dimension mismatch");
  Vec q = p;
  for (int i = 0; i < g.dim(); ++i) q(i) *= std::pow(lambda, g.weights()[i]);
  return q;
}

}  // namespace nilgeo
