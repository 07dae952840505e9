#include "helpers.hpp"

using namespace testing;

TEST_SUITE("geodesics") {
  TEST_CASE("sub-Riemannian heisenberg distance") {
    CHECK(heisenberg_sr_distance(v({1, 0, 0})) == 1.0);
    CHECK(heisenberg_sr_distance(v({0, 0, 1})) == doctest::Approx(kTwoSqrtPi).epsilon(1e-15));
    CHECK(heisenberg_sr_distance(v({0, 0, -1})) == doctest::Approx(kTwoSqrtPi).epsilon(1e-15));
    // circle arc: full loop of radius a/(2 pi) encloses z = a^2 / (4 pi)
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      Vec p = gaussian_vector(rng, 3);
      double lam = 0.3 + std::abs(p(0));
      double d = heisenberg_sr_distance(p);
      CHECK(heisenberg_sr_distance(v({lam * p(0), lam * p(1), lam * lam * p(2)})) ==
            doctest::Approx(lam * d).epsilon(1e-11));
      CHECK(d >= std::hypot(p(0), p(1)));
    }
    CHECK_THROWS_AS(heisenberg_sr_distance(v({1, 2})), SpecError);
  }

  TEST_CASE("riemannian heisenberg on the axis") {
    for (double z : {0.5, 3.0, 2 * kPi, 10.0, 100.0}) {
      Interval d = heisenberg_riemannian_distance(v({0, 0, z}));
      double expect = z <= 2 * kPi ? z : std::sqrt(4 * kPi * (z - kPi));
      CHECK(d.lo == doctest::Approx(expect).epsilon(1e-14));
      CHECK(d.hi == doctest::Approx(expect).epsilon(1e-14));
    }
    Interval flat = heisenberg_riemannian_distance(v({3, 4, 0}));
    CHECK(flat.lo == 5.0);
  }

  TEST_CASE("profile points lie on the sphere") {
    for (double r : {1.0, 3.0, 7.0, 15.0}) {
      for (double frac : {0.1, 0.5, 0.9}) {
        double a = frac * std::min(2 * kPi, r);
        Vec p = heisenberg_profile(r, a);
        Interval d = heisenberg_riemannian_distance(p);
        CHECK(d.lo <= r * (1 + 1e-12));
        CHECK(d.hi >= r * (1 - 1e-12));
        CHECK(d.hi - d.lo < 1e-10 * r);
      }
    }
    CHECK_THROWS_AS(heisenberg_profile(3.0, 0.0), SpecError);
    CHECK_THROWS_AS(heisenberg_profile(3.0, 3.0), SpecError);
  }

  TEST_CASE("profile derivative") {
    for (double a : {1e-3, 0.5, 2.0, 5.0}) {
      const double r = 9.0, h = 1e-6;
      double fd = (heisenberg_profile_z(r, a + h) - heisenberg_profile_z(r, a - h)) / (2 * h);
      CHECK(heisenberg_profile_dz(r, a) == doctest::Approx(fd).epsilon(1e-7));
    }
  }

  TEST_CASE("riemannian endpoint matches integrated control") {
    const auto& S = spec("heisenberg_riemannian");
    for (double k : {0.0, 1e-5, 0.7, 3.0}) {
      HeisenbergGeodesicParams q{k, 0.4, 2.5};
      auto u = SampledControl::sample(
          [&](double s) {
            double ph = q.theta + k * q.t * s;
            return v({-q.t * std::sin(ph), q.t * std::cos(ph), q.t * k});
          },
          3, 4097);
      CHECK(sup(heisenberg_riemannian_endpoint(q) - endpoint_step2(S, u)) < 1e-10);
    }
  }

  TEST_CASE("normal geodesic point and control agree") {
    for (const char* name : {"heisenberg", "heisenberg_riemannian", "free23"}) {
      const auto& S = spec(name);
      const auto dv = S.v_orthonormal().cols();
      Rng rng(13);
      Mat A = gaussian_vector(rng, dv * dv).reshaped(dv, dv);
      Mat M = 2.0 * (A - A.transpose());
      Vec zeta = S.drift_basis().cols() ? Vec(S.drift_basis() * gaussian_vector(rng, S.drift_basis().cols()))
                                        : Vec::Zero(S.rank());
      auto p = params_from_velocity(M, gaussian_vector(rng, dv), zeta);
      validate_params(S, p, 1e-10);
      Vec x = normal_geodesic_point(S, p, 1.0, 2049);
      auto u = normal_geodesic_control(S, p, 2049);
      CHECK(sup(x - endpoint_step2(S, u)) < 1e-9);
      // constant speed
      Vec sp = ((u.values() * S.metric()).array() * u.values().array()).rowwise().sum();
      CHECK(sp.maxCoeff() - sp.minCoeff() < 1e-9 * sp.maxCoeff());
    }
  }

  TEST_CASE("parameter validation") {
    const auto& S = spec("heisenberg");
    NormalGeodesicParams p;
    p.M = Mat::Identity(2, 2);
    p.b = Vec::Zero(2);
    p.c = Vec::Zero(2);
    p.zeta = Vec::Zero(2);
    CHECK_THROWS_WITH_AS(validate_params(S, p), doctest::Contains("skew"), SpecError);
    p.M = Mat::Zero(2, 2);
    p.c = v({1, 0});
    CHECK_THROWS_WITH_AS(validate_params(S, p), doctest::Contains("range"), SpecError);
    p.c = Vec::Zero(2);
    p.b = Vec::Zero(3);
    CHECK_THROWS_AS(validate_params(S, p), SpecError);
    Mat J(2, 2);
    J << 0, 1, -1, 0;
    p = params_from_velocity(J, v({1, 0}), Vec::Zero(2));
    p.b = v({1, 0});
    CHECK_THROWS_WITH_AS(validate_params(S, p), doctest::Contains("ker"), SpecError);
    CHECK_THROWS_AS(normal_geodesic_point(S, params_from_velocity(J, v({1, 0}), Vec::Zero(2)), 1.0, 100), SpecError);
  }
}
