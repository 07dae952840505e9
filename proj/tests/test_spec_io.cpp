#include "helpers.hpp"

#include "nilgeo/spec_io.hpp"

using namespace testing;

namespace {

json heisenberg_json() {
  return json::parse(R"({"dim": 3, "step": 2, "basis": ["X", "Y", "Z"],
    "brackets": [{"i": 0, "j": 1, "coeffs": {"2": 1.0}}],
    "horizontal": [0, 1], "metric": [[1, 0], [0, 1]]})");
}

}  // namespace

TEST_SUITE("spec_io") {
  TEST_CASE("bundled specs load") {
    for (const char* name : {"heisenberg", "heisenberg_riemannian", "hxr_riemannian", "free23", "engel_riemannian"}) {
      auto L = load_spec(name);
      CHECK(L.name == name);
      CHECK(L.hash.size() == 16);
    }
    CHECK(load_spec("heisenberg").hash == "b293bd2f2f298ba4");
  }

  TEST_CASE("hash is stable and content sensitive") {
    auto a = parse_spec(heisenberg_json());
    auto b = parse_spec(heisenberg_json());
    CHECK(a.hash == b.hash);
    json j = heisenberg_json();
    j["metric"][0][0] = 2.0;
    CHECK(parse_spec(j).hash != a.hash);
  }

  TEST_CASE("missing and malformed fields") {
    CHECK_THROWS_WITH_AS(parse_spec(json::parse(R"({"dim": 3})")), "spec: missing field 'step'", SpecError);
    json j = heisenberg_json();
    j["dim"] = 2.5;
    CHECK_THROWS_AS(parse_spec(j), SpecError);
    j = heisenberg_json();
    j["metric"] = json::parse("[[1, 0]]");
    CHECK_THROWS_WITH_AS(parse_spec(j), doctest::Contains("metric"), SpecError);
    j = heisenberg_json();
    j["horizontal"] = json::parse("[0, 5]");
    CHECK_THROWS_AS(parse_spec(j), SpecError);
    j = heisenberg_json();
    j["brackets"][0]["coeffs"] = json::parse(R"({"two": 1.0})");
    CHECK_THROWS_AS(parse_spec(j), SpecError);
    CHECK_THROWS_AS(load_spec("no_such_algebra"), SpecError);
  }

  TEST_CASE("horizontal as column vectors") {
    json j = heisenberg_json();
    j["horizontal"] = json::parse("[[1, 0, 0.5], [0, 1, 0]]");
    auto L = parse_spec(j);
    CHECK(L.structure->horizontal()(2, 0) == 0.5);
    CHECK(L.structure->is_carnot());
  }

  TEST_CASE("parse_vector") {
    CHECK(sup(parse_vector("1,-2.5,3e-1") - v({1, -2.5, 0.3})) == 0.0);
    CHECK_THROWS_AS(parse_vector("1,x"), SpecError);
  }

  TEST_CASE("control json roundtrip") {
    Rng rng(3);
    auto u = random_smooth_control(rng, 2, 65);
    auto back = control_from_json(control_to_json(u));
    CHECK(back.nodes() == 65);
    CHECK((back.values() - u.values()).norm() == 0.0);

    auto w = concat(u, u);
    auto wb = control_from_json(control_to_json(w));
    CHECK(wb.pieces().size() == 2);
    const auto& S = spec("heisenberg");
    CHECK(sup(endpoint_step2(S, wb) - endpoint_step2(S, w)) < 1e-15);

    FourierControl f;
    f.coefficients[1] = CVec::Zero(2);
    f.coefficients[1](0) = cplx(1.0, -0.5);
    f.coefficients[3] = CVec::Zero(2);
    f.coefficients[3](1) = cplx(0.0, 2.0);
    auto fb = fourier_from_json(fourier_to_json(f));
    CHECK(fb.coefficients.size() == 2);
    CHECK(std::abs(fb.coefficients[3](1) - cplx(0.0, 2.0)) == 0.0);
    auto sampled = control_from_json(fourier_to_json(f), 33);
    CHECK(sampled.nodes() == 33);
    CHECK(sup(sampled.values().row(0).transpose() - fourier_value(f, 0.0)) < 1e-15);
  }
}
