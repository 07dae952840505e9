#include "helpers.hpp"

using namespace testing;

namespace {

SampledControl circle(double a, Eigen::Index grid) {
  return SampledControl::sample(
      [a](double t) { return v({a * std::cos(2 * kPi * t), a * std::sin(2 * kPi * t)}); }, 2, grid);
}

FourierControl random_fourier(Rng& rng, int k, int support) {
  FourierControl f;
  std::uniform_int_distribution<int> pick(1, support);
  for (int r = 0; r < 4; ++r) {
    int n = pick(rng);
    f.coefficients[n] = gaussian_vector(rng, k).cast<cplx>() + cplx(0, 1) * gaussian_vector(rng, k).cast<cplx>();
  }
  return f;
}

}  // namespace

TEST_SUITE("controls") {
  TEST_CASE("circle on heisenberg") {
    const auto& S = spec("heisenberg");
    for (double a : {0.5, 1.0, 3.0}) {
      auto u = circle(a, 1025);
      Vec e = endpoint_step2(S, u);
      CHECK(sup(e - v({0, 0, a * a / (4 * kPi)})) < 1e-10);
      CHECK(energy(S, u) == doctest::Approx(a * a).epsilon(1e-12));
      CHECK(length(S, u) == doctest::Approx(a).epsilon(1e-12));
    }
  }

  TEST_CASE("constant control is a straight line") {
    const auto& S = spec("free23");
    Vec c = v({1, -2, 0.5});
    auto u = SampledControl::sample([&](double) { return c; }, 3, 9);
    Vec e = endpoint_step2(S, u);
    CHECK(sup(e.head(3) - c) < 1e-15);
    CHECK(sup(e.tail(3)) < 1e-15);
    CHECK(energy(S, u) == doctest::Approx(c.squaredNorm()));
  }

  TEST_CASE("step2 and product endpoints agree") {
    for (const char* name : {"heisenberg", "hxr_riemannian", "free23"}) {
      const auto& S = spec(name);
      Rng rng(derive_seed(5, 0));
      for (int t = 0; t < 5; ++t) {
        auto u = random_smooth_control(rng, S.rank(), 1025);
        CHECK(sup(endpoint_step2(S, u) - endpoint_product(S, u)) < 1e-9);
      }
    }
  }

  TEST_CASE("concat, reverse and refine") {
    const auto& S = spec("free23");
    const auto& g = S.algebra();
    Rng rng(9);
    auto u1 = random_smooth_control(rng, 3, 513);
    auto u2 = random_smooth_control(rng, 3, 257);
    auto w = concat(u1, u2);
    CHECK(w.pieces().size() == 2);
    CHECK(sup(endpoint_step2(S, w) - multiply(g, endpoint_step2(S, u1), endpoint_step2(S, u2))) < 1e-9);
    CHECK(energy(S, w) == doctest::Approx(2 * (energy(S, u1) + energy(S, u2))).epsilon(1e-12));

    auto back = concat(u1, reverse_negate(u1));
    CHECK(sup(endpoint_step2(S, back)) < 1e-9);
    CHECK(sup(multiply(g, endpoint_step2(S, u1), endpoint_step2(S, reverse_negate(u1)))) < 1e-9);

    auto fine = refine(u1);
    CHECK(fine.nodes() == 2 * 513 - 1);
    CHECK(sup(endpoint_step2(S, fine) - endpoint_step2(S, u1)) < 1e-9);
    auto tiny = refine(circle(1.0, 3));
    CHECK(tiny.nodes() == 5);
  }

  TEST_CASE("engel product endpoint") {
    const auto& S = spec("engel_riemannian");
    Vec c = v({1, 0.5, 0, 0});
    auto u = SampledControl::sample([&](double) { return c; }, 4, 33);
    CHECK(sup(endpoint_product(S, u) - c) < 1e-14);
    CHECK_THROWS_AS(endpoint_step2(S, u), SpecError);
    CHECK_THROWS_AS(horizontal_split(S, u), SpecError);
  }

  TEST_CASE("fourier real closed form against quadrature") {
    for (const char* name : {"heisenberg", "heisenberg_riemannian", "free23"}) {
      const auto& S = spec(name);
      Rng rng(21);
      for (int t = 0; t < 5; ++t) {
        auto f = random_fourier(rng, S.rank(), 8);
        auto cf = fourier_endpoint_real(S, f);
        auto u = fourier_to_sampled(f, 8193);
        CHECK(sup(cf.endpoint - endpoint_step2(S, u)) < 1e-9);
        CHECK(std::abs(cf.energy - energy(S, u)) < 1e-9);
      }
    }
    FourierControl bad;
    bad.coefficients[0] = CVec::Ones(2);
    CHECK_THROWS_AS(fourier_endpoint_real(spec("heisenberg"), bad), SpecError);
    CHECK_THROWS_AS(fourier_endpoint_complex(spec("heisenberg"), bad), SpecError);
  }

  TEST_CASE("fourier complex closed form against quadrature") {
    const auto& S = spec("free23");
    const auto& g = S.algebra();
    Rng rng(4);
    FourierControl f;
    for (int n : {-3, -1, 1, 2, 3}) f.coefficients[n] = gaussian_vector(rng, 3).cast<cplx>() + cplx(0, 1) * gaussian_vector(rng, 3).cast<cplx>();
    auto cf = fourier_endpoint_complex(S, f);
    // trapezoid is spectrally accurate for trigonometric integrands
    const int M = 256;
    CVec end = CVec::Zero(6);
    double en = 0.0;
    for (int j = 0; j < M; ++j) {
      double t = static_cast<double>(j) / M;
      CVec val = CVec::Zero(3), prim = CVec::Zero(3);
      for (const auto& [n, c] : f.coefficients) {
        cplx e = std::polar(1.0, 2 * kPi * n * t);
        val += c * e;
        prim += c * (e - 1.0) / cplx(0, 2 * kPi * n);
      }
      CVec a = S.horizontal().cast<cplx>() * val, A = S.horizontal().cast<cplx>() * prim;
      end += (a + 0.5 * g.bracket(A, a)) / double(M);
      en += val.squaredNorm() / M;
    }
    CHECK((cf.endpoint - end).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(cf.energy == doctest::Approx(en).epsilon(1e-12));
  }

  TEST_CASE("horizontal split") {
    const auto& S = spec("heisenberg_riemannian");
    Rng rng(2);
    auto u = random_smooth_control(rng, 3, 129);
    auto [vinf, drift] = horizontal_split(S, u);
    CHECK((vinf.values() + drift.values() - u.values()).norm() < 1e-13);
    CHECK(drift.values().col(0).norm() < 1e-14);
    CHECK(drift.values().col(1).norm() < 1e-14);
    CHECK(vinf.values().col(2).norm() < 1e-14);
  }

  TEST_CASE("simpson order under refinement") {
    const auto& S = spec("free23");
    auto f = [](double t) { return v({std::sin(5 * t) + t, std::exp(t), std::cos(7 * t * t)}); };
    Vec prev;
    std::vector<double> err;
    for (Eigen::Index N : {33, 65, 129, 257}) {
      Vec a = endpoint_step2(S, SampledControl::sample(f, 3, N));
      Vec b = endpoint_step2(S, SampledControl::sample(f, 3, 2 * N - 1));
      err.push_back(sup(a - b));
    }
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i - 1] / err[i] > 12.0);
  }

  TEST_CASE("bad grids") {
    CHECK_THROWS_AS(SampledControl(Mat::Zero(4, 2)), SpecError);
    CHECK_THROWS_AS(SampledControl(Mat::Zero(1, 2)), SpecError);
    auto u = SampledControl::zero(2, 5);
    CHECK_THROWS_AS(endpoint_step2(spec("free23"), u), SpecError);
    CHECK_THROWS_AS(u + SampledControl::zero(2, 7), SpecError);
  }
}
