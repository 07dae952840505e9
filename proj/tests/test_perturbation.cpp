#include "helpers.hpp"

#include "nilgeo/perturbation.hpp"

using namespace testing;

namespace {

Vec random_zeta(const SubRiemannianStructure& S, Rng& rng) {
  Vec z = Vec::Zero(S.dim());
  for (int k : S.algebra().derived_indices()) z(k) = gaussian_vector(rng, 1)(0);
  return z;
}

}  // namespace

TEST_SUITE("perturbation") {
  TEST_CASE("constants") {
    auto h = derived_pair_basis(spec("heisenberg"));
    CHECK(h.K == 1.0);
    CHECK(h.pairs.size() == 1);
    auto f = derived_pair_basis(spec("free23"));
    CHECK(f.K == doctest::Approx(std::sqrt(3.0)));

    Rng rng(1);
    auto u = random_smooth_control(rng, 2, 257);
    auto r = build_perturbation(spec("heisenberg"), u, v({0, 0, 1}));
    CHECK(r.C == doctest::Approx(12 * kPi));
    CHECK(r.certificate.N == 3);
    auto u3 = random_smooth_control(rng, 3, 257);
    Vec z = Vec::Zero(6);
    z(4) = 1.0;
    auto r3 = build_perturbation(spec("free23"), u3, z);
    CHECK(r3.C == doctest::Approx(4 * kPi * std::sqrt(3.0) * 15));
    CHECK(r3.blocks.size() == 3);
    CHECK(r3.blocks[2] == std::vector<int>{11, 12, 13, 14, 15});
  }

  TEST_CASE("decomposition rebuilds zeta") {
    const auto& S = spec("free23");
    const auto& g = S.algebra();
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      Vec z = random_zeta(S, rng);
      auto d = decompose_bracket(S, z);
      Vec rebuilt = Vec::Zero(6);
      for (size_t k = 0; k < d.pairs.size(); ++k) {
        CHECK(d.weights(k) >= 0.0);
        rebuilt += d.weights(k) * g.bracket(Vec(S.horizontal() * d.pairs[k].x), Vec(S.horizontal() * d.pairs[k].y));
      }
      CHECK(sup(rebuilt - z) < 1e-12);
      CHECK(d.zeta_norm == doctest::Approx(z.tail(3).norm()));
    }
    CHECK_THROWS_AS(decompose_bracket(S, v({1, 0, 0, 0, 0, 0})), SpecError);
  }

  TEST_CASE("certificates pass") {
    for (const char* name : {"heisenberg", "heisenberg_riemannian", "hxr_riemannian", "free23"}) {
      const auto& S = spec(name);
      Rng rng(derive_seed(17, 0));
      for (int t = 0; t < 10; ++t) {
        auto u = random_smooth_control(rng, S.rank(), 2049);
        Vec z = random_zeta(S, rng);
        auto r = build_perturbation(S, u, z);
        const auto& c = r.certificate;
        INFO(std::string(name), " sample ", t);
        CHECK(c.passed);
        CHECK(c.endpoint_residual <= 1e-6);
        CHECK(c.orthogonality_residual <= 1e-8);
        CHECK(c.energy <= c.bound);
        CHECK(c.energy == doctest::Approx(c.energy_exact).epsilon(1e-8));
        // the Fourier form is exact
        auto fe = fourier_endpoint_real(S, r.v_fourier);
        CHECK(fe.energy == doctest::Approx(c.energy_exact).epsilon(1e-12));
        auto c2 = verify_perturbation(S, u, r, z);
        CHECK(c2.passed);
        CHECK(c2.endpoint_residual <= 1e-6);
      }
    }
  }

  TEST_CASE("corrupted perturbation is caught") {
    const auto& S = spec("heisenberg");
    Rng rng(12);
    auto u = random_smooth_control(rng, 2, 2049);
    Vec z = v({0, 0, 0.7});
    auto r = build_perturbation(S, u, z);
    REQUIRE(verify_perturbation(S, u, r, z).passed);
    for (auto& [n, c] : r.v_fourier.coefficients) c *= 1.1;
    auto bad = verify_perturbation(S, u, r, z);
    CHECK_FALSE(bad.passed);
    CHECK(bad.endpoint_residual > 1e-3);

    // a first-mode component along u breaks orthogonality
    auto r2 = build_perturbation(S, u, z);
    CVec uhat = CVec::Zero(2);
    Vec t = u.times(), w = u.weights();
    for (Eigen::Index j = 0; j < u.nodes(); ++j)
      uhat += w(j) * std::polar(1.0, -2 * kPi * t(j)) * u.values().row(j).transpose().cast<cplx>();
    r2.v_fourier.coefficients[1] = r2.v_fourier.coefficients.count(1) ? CVec(r2.v_fourier.coefficients[1] + 0.1 * uhat)
                                                                       : CVec(0.1 * uhat);
    auto off = verify_perturbation(S, u, r2, z);
    CHECK_FALSE(off.passed);
    CHECK(off.orthogonality_residual > 1e-4);
  }

  TEST_CASE("zero shift gives zero perturbation") {
    const auto& S = spec("heisenberg");
    Rng rng(3);
    auto u = random_smooth_control(rng, 2, 129);
    auto r = build_perturbation(S, u, Vec::Zero(3));
    CHECK(r.v.values().norm() == 0.0);
    CHECK(r.certificate.passed);
  }

  TEST_CASE("resting control picks the first mode") {
    const auto& S = spec("heisenberg");
    auto r = build_perturbation(S, SampledControl::zero(2, 2049), v({0, 0, 1}));
    CHECK(r.certificate.passed);
    CHECK(r.certificate.energy_exact == doctest::Approx(4 * kPi).epsilon(1e-12));
    CHECK(std::abs(r.coefficients[0](0)) == doctest::Approx(std::sqrt(4 * kPi)).epsilon(1e-12));
    CHECK(sup(endpoint_step2(S, r.v) - v({0, 0, 1})) < 1e-9);
  }

  TEST_CASE("rejects step 3") {
    const auto& S = spec("engel_riemannian");
    CHECK_THROWS_AS(build_perturbation(S, SampledControl::zero(4, 33), Vec::Zero(4)), SpecError);
  }
}
