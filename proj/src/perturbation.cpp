#include "nilgeo/perturbation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace nilgeo {

namespace {

Vec derived_coords(const NilpotentAlgebra& g, const Vec& p) {
  const auto& d = g.derived_indices();
  Vec out(d.size());
  for (size_t i = 0; i < d.size(); ++i) out(i) = p(d[i]);
  return out;
}

CVec derived_coords(const NilpotentAlgebra& g, const CVec& p) {
  const auto& d = g.derived_indices();
  CVec out(d.size());
  for (size_t i = 0; i < d.size(); ++i) out(i) = p(d[i]);
  return out;
}

int rank_of(const Mat& A) {
  if (A.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * std::max(s(0), 1e-300)) ++r;
  return r;
}

void require_step2(const SubRiemannianStructure& S, const char* who) {
  if (S.algebra().step() != 2) throw SpecError(std::string(who) + ": algebra is not 2-step");
}

// endpoint of u, u+v and the pairing, all on u's grid
PerturbationCertificate certify(const SubRiemannianStructure& S, const SampledControl& u, const SampledControl& v,
                                const Vec& zeta, double energy_exact, double bound, double K, int N,
                                const CertificateTolerance& tol) {
  PerturbationCertificate c;
  Vec e0 = endpoint_step2(S, u);
  Vec e1 = endpoint_step2(S, u + v);
  c.endpoint_residual = (e1 - e0 - zeta).cwiseAbs().maxCoeff();
  Vec w = u.weights();
  Vec pair = ((v.values() * S.metric()).array() * u.values().array()).rowwise().sum();
  double cross = w.dot(pair);
  double nu = std::sqrt(std::max(energy(S, u), 0.0));
  c.energy = energy(S, v);
  double nv = std::sqrt(std::max(c.energy, 0.0));
  c.orthogonality_residual = (nu > 0.0 && nv > 0.0) ? std::abs(cross) / (nu * nv) : std::abs(cross);
  c.energy_exact = energy_exact;
  c.bound = bound;
  c.K = K;
  c.N = N;
  c.passed = c.endpoint_residual <= tol.endpoint && c.orthogonality_residual <= tol.orthogonality &&
             c.energy <= bound * (1.0 + tol.energy_rel) + 1e-15 && energy_exact <= bound * (1.0 + tol.energy_rel) + 1e-15;
  return c;
}

}  // namespace

PairBasis derived_pair_basis(const SubRiemannianStructure& S) {
  require_step2(S, "derived_pair_basis");
  const auto& g = S.algebra();
  const int m = g.derived_dim();
  const Mat& V = S.v_basis();
  const Mat& rho = S.metric();
  PairBasis out;
  out.brackets = Mat(m, 0);
  for (Eigen::Index i = 0; i < V.cols() && out.brackets.cols() < m; ++i)
    for (Eigen::Index j = i + 1; j < V.cols() && out.brackets.cols() < m; ++j) {
      Vec b = derived_coords(g, g.bracket(Vec(S.horizontal() * V.col(i)), Vec(S.horizontal() * V.col(j))));
      Mat trial(m, out.brackets.cols() + 1);
      trial << out.brackets, b;
      if (b.norm() == 0.0 || rank_of(trial) != trial.cols()) continue;
      Vec x = V.col(i) / std::sqrt(V.col(i).dot(rho * V.col(i)));
      Vec y = V.col(j) - x.dot(rho * V.col(j)) * x;
      y /= std::sqrt(y.dot(rho * y));
      Vec xy = derived_coords(g, g.bracket(Vec(S.horizontal() * x), Vec(S.horizontal() * y)));
      trial.col(trial.cols() - 1) = xy;
      out.brackets = trial;
      out.pairs.push_back({x, y});
    }
  if (out.brackets.cols() != m) throw InvariantViolation("derived_pair_basis: [V,V] does not span [g,g]");
  out.K = std::sqrt(static_cast<double>(m));
  return out;
}

BracketDecomposition decompose_bracket(const SubRiemannianStructure& S, const Vec& zeta) {
  require_step2(S, "decompose_bracket");
  const auto& g = S.algebra();
  if (zeta.size() != g.dim()) throw SpecError("decompose_bracket: dimension mismatch");
  Vec ab = abelian_projection(g, zeta);
  if (ab.size() > 0 && ab.cwiseAbs().maxCoeff() > 1e-10 * (1.0 + zeta.cwiseAbs().maxCoeff()))
    throw SpecError("decompose_bracket: zeta is not in [g,g]");
  PairBasis pb = derived_pair_basis(S);
  Vec zd = derived_coords(g, zeta);
  Vec a = pb.brackets.fullPivLu().solve(zd);
  BracketDecomposition out;
  out.K = pb.K;
  out.zeta_norm = a.norm();
  out.weights = a.cwiseAbs();
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const auto& p = pb.pairs[k];
    out.pairs.push_back(a(k) < 0.0 ? BracketPair{p.y, p.x} : p);
  }
  Vec rebuilt = Vec::Zero(g.dim());
  for (size_t k = 0; k < out.pairs.size(); ++k)
    rebuilt += out.weights(k) * g.bracket(Vec(S.horizontal() * out.pairs[k].x), Vec(S.horizontal() * out.pairs[k].y));
  if ((rebuilt - zeta).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + zeta.cwiseAbs().maxCoeff()))
    throw InvariantViolation("decompose_bracket: reconstruction failed");
  return out;
}

PerturbationResult build_perturbation(const SubRiemannianStructure& S, const SampledControl& u, const Vec& zeta,
                                      const CertificateTolerance& tol) {
  require_step2(S, "build_perturbation");
  if (u.dim() != S.rank()) throw SpecError("build_perturbation: control dimension mismatch");
  const auto& g = S.algebra();
  const int m = g.derived_dim();
  const int Nmax = m * m + 2 * m;
  const int k_dim = S.rank();

  PerturbationResult res;
  res.decomposition = decompose_bracket(S, zeta);
  const auto& dec = res.decomposition;
  res.C = 4.0 * kPi * dec.K * Nmax;

  const Vec t = u.times();
  const Vec w = u.weights();
  Mat amb = u.values() * S.horizontal().transpose();
  Mat U = cumulative_integral(amb, u.pieces());
  const CMat rho = S.metric().cast<cplx>();
  const CMat H = S.horizontal().cast<cplx>();

  Mat vvals = Mat::Zero(u.nodes(), k_dim);
  double energy_exact = 0.0;
  for (int k = 0; k < m; ++k) {
    std::vector<int> block;
    for (int n = (m + 2) * k + 1; n <= (m + 2) * (k + 1); ++n) block.push_back(n);
    res.blocks.push_back(block);
    if (!(dec.weights(k) > 0.0)) {
      res.coefficients.push_back(CVec::Zero(m + 2));
      continue;
    }
    CVec xi = dec.pairs[k].y.cast<cplx>() + cplx(0.0, 1.0) * dec.pairs[k].x.cast<cplx>();
    CVec xi_amb = H * xi;

    CMat M(m + 1, m + 2);
    for (int c = 0; c < m + 2; ++c) {
      const int n = block[c];
      CVec uhat = CVec::Zero(k_dim);
      CVec What = CVec::Zero(g.dim());
      for (Eigen::Index j = 0; j < u.nodes(); ++j) {
        cplx f = w(j) * std::polar(1.0, 2.0 * kPi * n * t(j));
        uhat += f * u.values().row(j).transpose().cast<cplx>();
        What += f * U.row(j).transpose().cast<cplx>();
      }
      M(0, c) = (xi.transpose() * rho * uhat)(0, 0);
      M.block(1, c, m, 1) = derived_coords(g, CVec(g.bracket(What, xi_amb)));
    }

    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-10 * smax && s(i) > 1e-300) ++rank;
    const int nulldim = m + 2 - rank;
    if (nulldim < 1) throw SolverDegenerate("build_perturbation: trivial nullspace");
    CMat Nb = svd.matrixV().rightCols(nulldim);

    // among unit nullspace vectors pick the one with the largest endpoint per unit energy
    Eigen::VectorXd dw(m + 2);
    for (int c = 0; c < m + 2; ++c) dw(c) = 1.0 / (4.0 * kPi * block[c]);
    CMat G = Nb.adjoint() * dw.asDiagonal() * Nb;
    Eigen::SelfAdjointEigenSolver<CMat> es(G);
    CVec z = Nb * es.eigenvectors().col(nulldim - 1);
    Eigen::Index imax = 0;
    z.cwiseAbs().maxCoeff(&imax);
    z *= std::conj(z(imax)) / std::abs(z(imax));

    double weighted = 0.0;
    for (int c = 0; c < m + 2; ++c) weighted += std::norm(z(c)) * dw(c);
    z *= std::sqrt(dec.weights(k) / weighted);
    res.coefficients.push_back(z);

    for (int c = 0; c < m + 2; ++c) {
      CVec cn = z(c) * xi;
      energy_exact += std::norm(z(c));
      auto it = res.v_fourier.coefficients.find(block[c]);
      if (it == res.v_fourier.coefficients.end())
        res.v_fourier.coefficients[block[c]] = cn;
      else
        it->second += cn;
      for (Eigen::Index j = 0; j < u.nodes(); ++j)
        vvals.row(j) += (cn * std::polar(1.0, 2.0 * kPi * block[c] * t(j))).real().transpose();
    }
  }
  res.v = SampledControl(vvals, u.pieces());
  res.certificate = certify(S, u, res.v, zeta, energy_exact, res.C * dec.zeta_norm, dec.K, Nmax, tol);
  return res;
}

PerturbationCertificate verify_perturbation(const SubRiemannianStructure& S, const SampledControl& u,
                                            const PerturbationResult& result, const Vec& zeta,
                                            const CertificateTolerance& tol) {
  require_step2(S, "verify_perturbation");
  SampledControl fine = refine(u);
  Mat vvals = Mat::Zero(fine.nodes(), fine.dim());
  if (!result.v_fourier.coefficients.empty()) {
    Vec t = fine.times();
    for (Eigen::Index j = 0; j < fine.nodes(); ++j) vvals.row(j) = fourier_value(result.v_fourier, t(j)).transpose();
  }
  SampledControl v(vvals, fine.pieces());
  double exact = 0.0;
  for (const auto& [n, c] : result.v_fourier.coefficients)
    exact += 0.5 * (c.real().dot(S.metric() * c.real()) + c.imag().dot(S.metric() * c.imag()));
  // sum |z|^2 equals the real-form energy because each xi has unit real and imaginary parts
  return certify(S, fine, v, zeta, exact, result.certificate.bound, result.certificate.K, result.certificate.N, tol);
}

}  // namespace nilgeo
