#pragma once

#include "nilgeo/controls.hpp"

#include <vector>

namespace nilgeo {

// rho-orthonormal pair in Delta coordinates
struct BracketPair {
  Vec x;
  Vec y;
};

struct PairBasis {
  std::vector<BracketPair> pairs;
  Mat brackets;  // m x m, column k = [x_k, y_k] on the derived coordinates
  double K;      // sqrt(m): l1 against the l2 norm of bracket coordinates
};

PairBasis derived_pair_basis(const SubRiemannianStructure& S);

struct BracketDecomposition {
  std::vector<BracketPair> pairs;  // swapped where the coordinate was negative
  Vec weights;                     // alpha_k >= 0
  double K;
  double zeta_norm;  // |zeta| = l2 norm of the coordinates in the bracket basis
};

// zeta is an algebra vector supported on [g,g].
BracketDecomposition decompose_bracket(const SubRiemannianStructure& S, const Vec& zeta);

struct PerturbationCertificate {
  double endpoint_residual = 0.0;       // sup norm of endpoint(u+v) - endpoint(u) - zeta
  double orthogonality_residual = 0.0;  // |int rho(v,u)| / (|u| |v|)
  double energy = 0.0;                  // quadrature
  double energy_exact = 0.0;            // sum |z|^2
  double bound = 0.0;                   // 4 pi K N |zeta|
  double K = 0.0;
  int N = 0;
  bool passed = false;
};

struct CertificateTolerance {
  double endpoint = 1e-6;
  double orthogonality = 1e-8;
  double energy_rel = 1e-9;
};

struct PerturbationResult {
  SampledControl v;
  FourierControl v_fourier;  // exact real form, Delta coordinates
  std::vector<std::vector<int>> blocks;
  std::vector<CVec> coefficients;  // z_{n,k} per block (zero vector for skipped blocks)
  BracketDecomposition decomposition;
  PerturbationCertificate certificate;
  double C = 0.0;
};

PerturbationResult build_perturbation(const SubRiemannianStructure& S, const SampledControl& u, const Vec& zeta,
                                      const CertificateTolerance& tol = {});

// Recomputes the certificate on the refined grid (2N-1 nodes), evaluating v from its Fourier form.
PerturbationCertificate verify_perturbation(const SubRiemannianStructure& S, const SampledControl& u,
                                            const PerturbationResult& result, const Vec& zeta,
                                            const CertificateTolerance& tol = {});

}  // namespace nilgeo
