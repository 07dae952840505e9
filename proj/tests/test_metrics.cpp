#include "helpers.hpp"

using namespace testing;

namespace {

Budget quick(int starts = 4) {
  Budget b;
  b.starts = starts;
  b.grid = 1025;
  return b;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("heisenberg reference values") {
    const auto& S = spec("heisenberg");
    auto a = distance_upper(S, v({1, 0, 0}), quick());
    CHECK(a.upper == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(a.lower == 1.0);
    auto b = distance_upper(S, v({0, 0, 1}), quick());
    CHECK(std::abs(b.upper - kTwoSqrtPi) < 1e-6);
    CHECK(b.upper >= kTwoSqrtPi - 1e-9);
    REQUIRE(b.witness);
    CHECK(sup(endpoint_step2(S, *b.witness) - v({0, 0, 1})) <= 1e-6);
    CHECK(b.methods.back() == "legendre-quadratic");
  }

  TEST_CASE("optimizer against closed form") {
    const auto& S = spec("heisenberg");
    Rng rng(31);
    for (int t = 0; t < 6; ++t) {
      Vec p = gaussian_vector(rng, 3);
      double d = heisenberg_sr_distance(p);
      auto e = distance_upper(S, p, quick(6));
      CHECK(e.upper >= d * (1 - 1e-9));
      CHECK(e.upper <= d * (1 + 1e-3));
    }
  }

  TEST_CASE("trivial target") {
    auto e = distance_upper(spec("free23"), Vec::Zero(6));
    CHECK(e.upper == 0.0);
    CHECK(e.methods.back() == "trivial");
  }

  TEST_CASE("shooting") {
    const auto& S = spec("heisenberg");
    auto e = distance_shooting(S, v({0, 0, 1}), quick(8));
    CHECK(std::abs(e.upper - kTwoSqrtPi) < 1e-3);
    CHECK_THROWS_AS(distance_shooting(spec("engel_riemannian"), v({1, 0, 0, 0})), SpecError);
  }

  TEST_CASE("exact oracle recognition") {
    CHECK(has_exact_oracle(spec("heisenberg")));
    CHECK(has_exact_oracle(spec("heisenberg_riemannian")));
    CHECK(has_exact_oracle(spec("hxr_riemannian")));
    CHECK_FALSE(has_exact_oracle(spec("free23")));
    CHECK_FALSE(has_exact_oracle(spec("engel_riemannian")));

    auto iv = exact_distance(spec("hxr_riemannian"), v({0, 0, 1, 2}));
    REQUIRE(iv);
    CHECK(iv->mid() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    auto r = distance_bracket(spec("heisenberg_riemannian"), v({0, 0, 10}));
    CHECK(r.exact);
    CHECK(r.lower == doctest::Approx(std::sqrt(4 * kPi * (10 - kPi))).epsilon(1e-12));
  }

  TEST_CASE("stretched frame") {
    auto St = stretched_heisenberg(spec("heisenberg"));
    REQUIRE(has_exact_oracle(St));
    CHECK(exact_distance(St, v({1, 0, 0}))->mid() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(exact_distance(St, v({0, 0, 1}))->mid() == doctest::Approx(2 * std::sqrt(kPi / 2)).epsilon(1e-12));
    auto e = distance_upper(St, v({0, 0, 1}), quick());
    CHECK(e.upper == doctest::Approx(2 * std::sqrt(kPi / 2)).epsilon(1e-4));
  }

  TEST_CASE("exact oracle agrees with optimizer on riemannian heisenberg") {
    const auto& S = spec("heisenberg_riemannian");
    for (const Vec& p : {v({1, 0.5, 3}), v({0.2, 0, 9}), v({2, -1, 0.5})}) {
      auto iv = exact_distance(S, p);
      auto e = distance_upper(S, p, quick(6));
      CHECK(e.upper >= iv->lo);
      CHECK(e.upper <= iv->hi * (1 + 1e-3));
    }
  }

  TEST_CASE("free23 vertical target") {
    Vec p = Vec::Zero(6);
    p(3) = 1.0;
    auto e = distance_upper(spec("free23"), p, quick());
    CHECK(e.upper == doctest::Approx(kTwoSqrtPi).epsilon(1e-4));
  }

  TEST_CASE("engel asymptotic distance") {
    const double eps = 1e-3;
    auto e = asymptotic_distance(spec("engel_riemannian"), v({0, 1, 0, eps}), quick());
    CHECK(e.upper <= std::sqrt(1 + 8 * kPi * kPi * eps));
    CHECK(e.upper >= 1.0);
    CHECK(e.methods.back() == "asymptotic-structure");
  }

  TEST_CASE("infeasible budget") {
    Budget b = quick(1);
    b.modes = 0;
    b.feas_tol = 1e-14;
    CHECK_THROWS_AS(distance_upper(spec("heisenberg"), v({0, 0, 1}), b), Infeasible);
    CHECK_THROWS_AS(distance_upper(spec("heisenberg"), v({0, 0}), b), SpecError);
  }
}
