#pragma once

#include "nilgeo/algebra.hpp"
#include "nilgeo/quadrature.hpp"

#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace nilgeo {

// Samples of a control on [0,1] in Delta coordinates (rows are nodes).
// Usually one uniform piece; concatenation keeps the pieces apart so jumps sit on piece boundaries.
class SampledControl {
 public:
  SampledControl() = default;
  explicit SampledControl(Mat values);
  SampledControl(Mat values, std::vector<GridPiece> pieces);

  Eigen::Index nodes() const { return values_.rows(); }
  int dim() const { return static_cast<int>(values_.cols()); }
  const Mat& values() const { return values_; }
  Mat& values() { return values_; }
  const std::vector<GridPiece>& pieces() const { return pieces_; }
  Vec times() const;
  Vec weights() const { return simpson_weights(pieces_, nodes()); }

  static SampledControl sample(const std::function<Vec(double)>& f, int k, Eigen::Index grid);
  static SampledControl zero(int k, Eigen::Index grid);

 private:
  Mat values_;
  std::vector<GridPiece> pieces_;
};

SampledControl operator+(const SampledControl& a, const SampledControl& b);
SampledControl operator*(double s, const SampledControl& a);

// v(t) = sum_n c_n e^{2 pi i n t}; the real form uses Re of the positive-support sum.
struct FourierControl {
  std::map<int, CVec> coefficients;
};

Vec endpoint_step2(const SubRiemannianStructure& S, const SampledControl& u);
Vec endpoint_product(const SubRiemannianStructure& S, const SampledControl& u);

double energy(const SubRiemannianStructure& S, const SampledControl& u);
double length(const SubRiemannianStructure& S, const SampledControl& u);

struct ComplexEndpoint {
  CVec endpoint;
  double energy;
};
ComplexEndpoint fourier_endpoint_complex(const SubRiemannianStructure& S, const FourierControl& v);

struct RealEndpoint {
  Vec endpoint;
  double energy;
};
// closed forms for the real control t -> sum_{n>0} Re(c_n f_n(t))
RealEndpoint fourier_endpoint_real(const SubRiemannianStructure& S, const FourierControl& v);

SampledControl fourier_to_sampled(const FourierControl& v, Eigen::Index grid);
Vec fourier_value(const FourierControl& v, double t);

// u = u_inf + drift with u_inf in V and drift in Delta ∩ [g,g], both in Delta coordinates.
std::pair<SampledControl, SampledControl> horizontal_split(const SubRiemannianStructure& S,
                                                           const SampledControl& u);

SampledControl concat(const SampledControl& u1, const SampledControl& u2);
SampledControl reverse_negate(const SampledControl& u);

// Inserts midpoints by 4-point Lagrange interpolation: N nodes -> 2N-1 nodes per piece.
SampledControl refine(const SampledControl& u);

// Random smooth control: a few low-order Legendre-type terms with Gaussian coefficients.
SampledControl random_smooth_control(Rng& rng, int k, Eigen::Index grid, double scale = 1.0, int terms = 5);

}  // namespace nilgeo
