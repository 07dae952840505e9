#include "nilgeo/controls.hpp"

#include <algorithm>
#include <cmath>

namespace nilgeo {

namespace {

void check_pieces(const Mat& values, const std::vector<GridPiece>& pieces) {
  Eigen::Index next = 0;
  double t = 0.0;
  for (const auto& p : pieces) {
    if (p.first != next || p.count < 3 || p.count % 2 == 0 || p.t1 <= p.t0 || std::abs(p.t0 - t) > 1e-12)
      throw SpecError("control: grid pieces must tile [0,1] with odd node counts >= 3");
    next += p.count;
    t = p.t1;
  }
  if (next != values.rows() || std::abs(t - 1.0) > 1e-12) throw SpecError("control: pieces do not cover the samples");
  if (!values.allFinite()) throw SpecError("control: non-finite sample");
}

double shifted_legendre(int a, double t) {
  double x = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = x;
  if (a == 0) return 1.0;
  for (int k = 2; k <= a; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * a + 1.0) * p1;
}

}  // namespace

SampledControl::SampledControl(Mat values) : values_(std::move(values)) {
  pieces_.push_back({0, values_.rows(), 0.0, 1.0});
  check_pieces(values_, pieces_);
}

SampledControl::SampledControl(Mat values, std::vector<GridPiece> pieces)
    : values_(std::move(values)), pieces_(std::move(pieces)) {
  check_pieces(values_, pieces_);
}

Vec SampledControl::times() const {
  Vec t(nodes());
  for (const auto& p : pieces_)
    for (Eigen::Index j = 0; j < p.count; ++j) t(p.first + j) = p.t0 + j * p.step();
  return t;
}

SampledControl SampledControl::sample(const std::function<Vec(double)>& f, int k, Eigen::Index grid) {
  Mat v(grid, k);
  for (Eigen::Index j = 0; j < grid; ++j) {
    Vec x = f(static_cast<double>(j) / static_cast<double>(grid - 1));
    if (x.size() != k) throw SpecError("control: sampled function has wrong dimension");
    v.row(j) = x.transpose();
  }
  return SampledControl(v);
}

SampledControl SampledControl::zero(int k, Eigen::Index grid) { return SampledControl(Mat::Zero(grid, k)); }

SampledControl operator+(const SampledControl& a, const SampledControl& b) {
  if (a.nodes() != b.nodes() || a.dim() != b.dim() || a.pieces().size() != b.pieces().size())
    throw SpecError("control: adding controls on different grids");
  return SampledControl(a.values() + b.values(), a.pieces());
}

SampledControl operator*(double s, const SampledControl& a) { return SampledControl(s * a.values(), a.pieces()); }

Vec endpoint_step2(const SubRiemannianStructure& S, const SampledControl& u) {
  if (S.algebra().step() != 2) throw SpecError("endpoint_step2: algebra is not 2-step");
  if (u.dim() != S.rank()) throw SpecError("endpoint_step2: control dimension mismatch");
  const auto& g = S.algebra();
  Mat amb = u.values() * S.horizontal().transpose();
  Vec w = u.weights();
  Vec first = amb.transpose() * w;
  Mat U = cumulative_integral(amb, u.pieces());
  Vec second = Vec::Zero(g.dim());
  for (Eigen::Index j = 0; j < amb.rows(); ++j)
    second += w(j) * g.bracket(U.row(j).transpose(), amb.row(j).transpose());
  return first + 0.5 * second;
}

Vec endpoint_product(const SubRiemannianStructure& S, const SampledControl& u) {
  if (u.dim() != S.rank()) throw SpecError("endpoint_product: control dimension mismatch");
  const auto& g = S.algebra();
  Mat amb = u.values() * S.horizontal().transpose();
  Vec gamma = Vec::Zero(g.dim());
  for (const auto& p : u.pieces()) {
    const double H = 2.0 * p.step();
    for (Eigen::Index j = 0; j + 2 < p.count; j += 2) {
      Vec a0 = amb.row(p.first + j).transpose();
      Vec a1 = amb.row(p.first + j + 1).transpose();
      Vec a2 = amb.row(p.first + j + 2).transpose();
      // fourth-order Magnus step over the panel
      Vec omega = (H / 6.0) * (a0 + 4.0 * a1 + a2) + (H * H / 12.0) * g.bracket(a1, Vec(a2 - a0));
      gamma = multiply(g, gamma, omega);
    }
  }
  return gamma;
}

double energy(const SubRiemannianStructure& S, const SampledControl& u) {
  if (u.dim() != S.rank()) throw SpecError("energy: control dimension mismatch");
  Vec q = ((u.values() * S.metric()).array() * u.values().array()).rowwise().sum();
  return u.weights().dot(q);
}

double length(const SubRiemannianStructure& S, const SampledControl& u) {
  if (u.dim() != S.rank()) throw SpecError("length: control dimension mismatch");
  Vec q = ((u.values() * S.metric()).array() * u.values().array()).rowwise().sum();
  return u.weights().dot(q.cwiseMax(0.0).cwiseSqrt());
}

ComplexEndpoint fourier_endpoint_complex(const SubRiemannianStructure& S, const FourierControl& v) {
  const auto& g = S.algebra();
  ComplexEndpoint out{CVec::Zero(g.dim()), 0.0};
  const CMat H = S.horizontal().cast<cplx>();
  const CMat rho = S.metric().cast<cplx>();
  for (const auto& [n, c] : v.coefficients) {
    if (n == 0) throw SpecError("fourier: coefficient at n = 0");
    if (c.size() != S.rank()) throw SpecError("fourier: coefficient dimension mismatch");
    auto it = v.coefficients.find(-n);
    if (it != v.coefficients.end()) {
      CVec b = g.bracket(H * c, H * it->second);
      out.endpoint += b / (cplx(0.0, 4.0 * kPi * n));
    }
    out.energy += (c.transpose() * rho * c.conjugate())(0, 0).real();
  }
  return out;
}

RealEndpoint fourier_endpoint_real(const SubRiemannianStructure& S, const FourierControl& v) {
  const auto& g = S.algebra();
  RealEndpoint out{Vec::Zero(g.dim()), 0.0};
  for (const auto& [n, c] : v.coefficients) {
    if (n <= 0) throw SpecError("fourier: real form needs positive support");
    if (c.size() != S.rank()) throw SpecError("fourier: coefficient dimension mismatch");
    Vec re = c.real(), im = c.imag();
    out.endpoint += g.bracket(Vec(S.horizontal() * im), Vec(S.horizontal() * re)) / (4.0 * kPi * n);
    out.energy += 0.5 * (re.dot(S.metric() * re) + im.dot(S.metric() * im));
  }
  return out;
}

Vec fourier_value(const FourierControl& v, double t) {
  if (v.coefficients.empty()) throw SpecError("fourier: empty control");
  Vec x = Vec::Zero(v.coefficients.begin()->second.size());
  for (const auto& [n, c] : v.coefficients) {
    if (n <= 0) throw SpecError("fourier: real form needs positive support");
    cplx f = std::polar(1.0, 2.0 * kPi * n * t);
    x += (c * f).real();
  }
  return x;
}

SampledControl fourier_to_sampled(const FourierControl& v, Eigen::Index grid) {
  if (v.coefficients.empty()) throw SpecError("fourier: empty control");
  const int k = static_cast<int>(v.coefficients.begin()->second.size());
  return SampledControl::sample([&](double t) { return fourier_value(v, t); }, k, grid);
}

std::pair<SampledControl, SampledControl> horizontal_split(const SubRiemannianStructure& S,
                                                           const SampledControl& u) {
  if (S.algebra().step() != 2) throw SpecError("horizontal_split: algebra is not 2-step");
  if (u.dim() != S.rank()) throw SpecError("horizontal_split: control dimension mismatch");
  Mat vinf = u.values() * S.v_projector().transpose();
  Mat drift = u.values() - vinf;
  return {SampledControl(vinf, u.pieces()), SampledControl(drift, u.pieces())};
}

SampledControl concat(const SampledControl& u1, const SampledControl& u2) {
  if (u1.dim() != u2.dim()) throw SpecError("concat: controls live in different spaces");
  Mat v(u1.nodes() + u2.nodes(), u1.dim());
  v << 2.0 * u1.values(), 2.0 * u2.values();
  std::vector<GridPiece> pieces;
  for (auto p : u1.pieces()) pieces.push_back({p.first, p.count, 0.5 * p.t0, 0.5 * p.t1});
  for (auto p : u2.pieces()) pieces.push_back({p.first + u1.nodes(), p.count, 0.5 + 0.5 * p.t0, 0.5 + 0.5 * p.t1});
  return SampledControl(v, pieces);
}

SampledControl reverse_negate(const SampledControl& u) {
  Mat v = -u.values().colwise().reverse();
  std::vector<GridPiece> pieces;
  const Eigen::Index N = u.nodes();
  for (auto it = u.pieces().rbegin(); it != u.pieces().rend(); ++it)
    pieces.push_back({N - (it->first + it->count), it->count, 1.0 - it->t1, 1.0 - it->t0});
  return SampledControl(v, pieces);
}

SampledControl refine(const SampledControl& u) {
  Mat out(0, u.dim());
  std::vector<GridPiece> pieces;
  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& p : u.pieces()) {
    const Eigen::Index n = p.count;
    auto f = [&](Eigen::Index j) { return u.values().row(p.first + j); };
    GridPiece q{static_cast<Eigen::Index>(rows.size()), 2 * n - 1, p.t0, p.t1};
    for (Eigen::Index j = 0; j < n; ++j) {
      rows.push_back(f(j));
      if (j + 1 == n) break;
      Eigen::RowVectorXd mid;
      if (n == 3) {
        mid = (j == 0) ? Eigen::RowVectorXd(0.375 * f(0) + 0.75 * f(1) - 0.125 * f(2))
                       : Eigen::RowVectorXd(-0.125 * f(0) + 0.75 * f(1) + 0.375 * f(2));
      } else if (j == 0) {
        mid = 0.3125 * f(0) + 0.9375 * f(1) - 0.3125 * f(2) + 0.0625 * f(3);
      } else if (j == n - 2) {
        mid = 0.0625 * f(n - 4) - 0.3125 * f(n - 3) + 0.9375 * f(n - 2) + 0.3125 * f(n - 1);
      } else {
        mid = (-f(j - 1) + 9.0 * f(j) + 9.0 * f(j + 1) - f(j + 2)) / 16.0;
      }
      rows.push_back(mid);
    }
    pieces.push_back(q);
  }
  out.resize(rows.size(), u.dim());
  for (size_t r = 0; r < rows.size(); ++r) out.row(r) = rows[r];
  return SampledControl(out, pieces);
}

SampledControl random_smooth_control(Rng& rng, int k, Eigen::Index grid, double scale, int terms) {
  std::vector<Vec> coeff;
  for (int a = 0; a < terms; ++a) coeff.push_back(gaussian_vector(rng, k, scale / (1.0 + a)));
  Vec phase = gaussian_vector(rng, k, 1.0);
  Vec amp = gaussian_vector(rng, k, 0.3 * scale);
  return SampledControl::sample(
      [&](double t) {
        Vec x = Vec::Zero(k);
        for (int a = 0; a < terms; ++a) x += shifted_legendre(a, t) * coeff[a];
        for (int i = 0; i < k; ++i) x(i) += amp(i) * std::sin(2.0 * kPi * 3.0 * t + phase(i));
        return x;
      },
      k, grid);
}

}  // namespace nilgeo
