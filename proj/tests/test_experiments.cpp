#include "helpers.hpp"

using namespace testing;

namespace {

json small(std::initializer_list<double> scales) {
  json c;
  c["scales"] = std::vector<double>(scales);
  c["random_per_scale"] = 0;
  c["starts"] = 3;
  c["grid"] = 513;
  c["seed"] = 5;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("report serialization") {
    ExperimentReport r;
    r.name = "t";
    r.columns = {"a", "b"};
    r.add_row({1.0, 2.5});
    r.add_row({3.0, 0.1});
    CHECK_THROWS(r.add_row({1.0}));
    r.checks["ok"] = true;
    CHECK(r.passed());
    r.checks["bad"] = false;
    CHECK_FALSE(r.passed());
    CHECK(r.column("b") == std::vector<double>{2.5, 0.1});
    CHECK(r.to_csv().rfind("a,b\n", 0) == 0);
    json j = r.to_json();
    CHECK(j["rows"].size() == 2);
    json e = envelope("abc", json{{"x", 1}});
    CHECK(e["version"] == kVersion);
    CHECK(e["algebra_hash"] == "abc");
    CHECK(e["config"]["x"] == 1);
  }

  TEST_CASE("budget defaults are written back") {
    json c = json::object();
    Budget b = budget_from_config(c);
    CHECK(b.grid == 1025);
    CHECK(c["seed"] == 1);
    CHECK(c["starts"] == 6);
  }

  TEST_CASE("gap scan small") {
    auto r = gap_scan(spec("heisenberg_riemannian"), small({2, 10, 20}));
    CHECK(r.checks.at("dinf_upper_ge_d_lower"));
    CHECK(r.rows.size() == 9);
    CHECK(r.config["bounded_from"] == 10.0);
    // C sits near 4 pi^2
    CHECK(r.summary["C_fit"].get<double>() == doctest::Approx(4 * kPi * kPi).epsilon(1e-3));
    auto c = gap_scan(spec("heisenberg"), small({2, 5}));
    CHECK(c.checks.at("gap_contains_zero"));
    CHECK_THROWS_AS(gap_scan(spec("engel_riemannian")), SpecError);
  }

  TEST_CASE("gap scan is reproducible") {
    json c = small({3});
    c["random_per_scale"] = 2;
    c["directions"] = json::array();
    const auto& S = spec("free23");
    auto a = gap_scan(S, c);
    auto b = gap_scan(S, c);
    CHECK(a.to_csv() == b.to_csv());
    c["seed"] = 6;
    CHECK(gap_scan(S, c).to_csv() != a.to_csv());
  }

  TEST_CASE("mismatch scan small") {
    const auto& S = spec("heisenberg");
    auto r = mismatch_scan(S, stretched_heisenberg(S), small({10, 20, 40}));
    CHECK(r.checks.at("superlinear_divergence"));
    CHECK(r.summary["loglog_slope"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("ballbox small") {
    json c{{"samples", 8}, {"starts", 3}, {"seed", 2}};
    auto r = ballbox_check(spec("heisenberg_riemannian"), c);
    CHECK(r.checks.at("zero_violations"));
    CHECK(r.summary["C"].get<double>() == doctest::Approx(12 * kPi));
    CHECK(r.rows.size() == 8);
  }

  TEST_CASE("riemannian heisenberg volume") {
    CHECK(heisenberg_ball_volume(8.0) == doctest::Approx(3933.3204985832895).epsilon(1e-10));
    CHECK(heisenberg_ball_volume(0.05) / std::pow(0.05, 3) == doctest::Approx(4 * kPi / 3).epsilon(1e-2));
    auto r = heisenberg_volume();
    CHECK(r.passed());
    CHECK(r.summary["C0"].get<double>() == doctest::Approx(-2 * kPi * kPi).epsilon(1e-8));
    CHECK(r.summary["C4"].get<double>() == doctest::Approx(0.8258757622091628).epsilon(1e-10));
    CHECK(r.summary["C2"].get<double>() == doctest::Approx(8.910509146651837).epsilon(1e-8));
  }

  TEST_CASE("sub-Riemannian ball volume") {
    CHECK(heisenberg_sr_ball_volume(1.0) == doctest::Approx(0.8258757622091628).epsilon(1e-10));
    CHECK(heisenberg_sr_ball_volume(2.0) == doctest::Approx(16 * 0.8258757622091628).epsilon(1e-10));
    CHECK(heisenberg_sr_ball_volume_sliced(1.0) == doctest::Approx(0.8258757622091628).epsilon(1e-6));
  }

  TEST_CASE("finsler volume") {
    auto r = finsler_linf_volume();
    CHECK(r.passed());
    CHECK(r.summary["D"].get<double>() == doctest::Approx(2 * kPi).epsilon(1e-6));
  }

  TEST_CASE("monte carlo small") {
    json c{{"samples", 4000}, {"seed", 3}};
    auto r = mc_ball_volume(spec("heisenberg_riemannian"), c);
    CHECK(r.checks.at("agrees_with_quadrature"));
  }

  TEST_CASE("rough isometry identity and shear") {
    const auto& S = spec("hxr_riemannian");
    json c{{"scales", {2, 10, 50}}, {"pairs_per_scale", 2}, {"expect", "zero"}, {"starts", 3}, {"grid", 513}};
    auto id = rough_isometry_scan(S, [](const Vec& p) { return p; }, c);
    CHECK(id.checks.at("identity_zero"));
    Mat L = Mat::Zero(1, 3);
    L(0, 2) = 1.0;
    auto a = shear_automorphism(S, L);
    c["expect"] = "bounded";
    c["fit_from"] = 10.0;
    auto sh = rough_isometry_scan(S, [a](const Vec& p) { return a.apply(p); }, c);
    CHECK(sh.checks.at("bounded_signature"));
    c["expect"] = "sideways";
    CHECK_THROWS_AS(rough_isometry_scan(S, [](const Vec& p) { return p; }, c), SpecError);
  }
}
