#include "helpers.hpp"

#include <unsupported/Eigen/MatrixFunctions>

using namespace testing;

namespace {

std::shared_ptr<NilpotentAlgebra> heis() {
  return std::make_shared<NilpotentAlgebra>(std::vector<std::string>{"X", "Y", "Z"}, 2,
                                            std::vector<BracketTerm>{{0, 1, 2, 1.0}});
}

Mat engel_rep(const Vec& p) {
  // X1 = e12 + e23 + e34, X2 = e34, Y = e24, Z = e14
  Mat A = Mat::Zero(4, 4);
  A(0, 1) += p(0);
  A(1, 2) += p(0);
  A(2, 3) += p(0) + p(1);
  A(1, 3) += p(2);
  A(0, 3) += p(3);
  return A;
}

}  // namespace

TEST_SUITE("algebra") {
  TEST_CASE("weights and graded dimension") {
    CHECK(spec("heisenberg").algebra().graded_dimension() == 4);
    CHECK(spec("free23").algebra().graded_dimension() == 9);
    const auto& e = spec("engel_riemannian").algebra();
    CHECK(e.weights() == std::vector<int>{1, 1, 2, 3});
    CHECK(e.graded_dimension() == 7);
    CHECK(spec("hxr_riemannian").algebra().complement_indices() == std::vector<int>{0, 1, 3});
  }

  TEST_CASE("heisenberg product") {
    auto g = heis();
    Vec p = v({1, 2, 3}), q = v({-1, 4, 0.5});
    Vec pq = multiply(*g, p, q);
    CHECK(pq(2) == doctest::Approx(3.5 + 0.5 * (1 * 4 - 2 * -1)));
    CHECK(sup(multiply(*g, p, inverse(*g, p))) == 0.0);
    // associativity
    Vec r = v({0.3, -0.7, 2});
    CHECK(sup(multiply(*g, multiply(*g, p, q), r) - multiply(*g, p, multiply(*g, q, r))) < 1e-12);
  }

  TEST_CASE("step 3 product matches matrix exp/log") {
    const auto& g = spec("engel_riemannian").algebra();
    // the representation satisfies the same brackets
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        Vec ei = Vec::Unit(4, i), ej = Vec::Unit(4, j);
        Mat c = engel_rep(ei) * engel_rep(ej) - engel_rep(ej) * engel_rep(ei);
        CHECK((c - engel_rep(g.bracket(ei, ej))).norm() < 1e-14);
      }
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
      Vec p = gaussian_vector(rng, 4), q = gaussian_vector(rng, 4);
      Mat prod = engel_rep(p).exp() * engel_rep(q).exp();
      Mat lg = prod.log();
      Vec r = multiply(g, p, q);
      CHECK((lg - engel_rep(r)).norm() < 1e-10);
    }
  }

  TEST_CASE("validation errors") {
    using T = std::vector<BracketTerm>;
    auto names5 = std::vector<std::string>{"X1", "X2", "X3", "Y", "Z"};
    try {
      NilpotentAlgebra bad(names5, 3, T{{0, 1, 3, 1.0}, {3, 2, 4, 1.0}});
      FAIL("expected a Jacobi error");
    } catch (const SpecError& e) {
      CHECK(std::string(e.what()).find("Jacobi identity violated on (X1,X2,X3)") != std::string::npos);
    }
    auto names4 = std::vector<std::string>{"X1", "X2", "Y", "Z"};
    CHECK_THROWS_WITH_AS(NilpotentAlgebra(names4, 2, T{{0, 1, 2, 1.0}, {0, 2, 3, 1.0}}),
                         doctest::Contains("not 2-step"), SpecError);
    CHECK_THROWS_AS(NilpotentAlgebra(names4, 4, T{}), SpecError);
    CHECK_THROWS_WITH_AS(NilpotentAlgebra(names4, 2, T{{1, 1, 2, 1.0}}), doctest::Contains("antisymmetry"), SpecError);
    CHECK_THROWS_AS(NilpotentAlgebra(names4, 2, T{{0, 1, 7, 1.0}}), SpecError);

    auto g = heis();
    CHECK_THROWS_WITH_AS(SubRiemannianStructure(g, Mat::Identity(3, 2), v({1, -1}).asDiagonal().toDenseMatrix()),
                         doctest::Contains("positive definite"), SpecError);
    Mat H = Mat::Zero(3, 1);
    H(0, 0) = 1;
    CHECK_THROWS_WITH_AS(SubRiemannianStructure(g, H, Mat::Identity(1, 1)), doctest::Contains("generate"), SpecError);
    Mat nonsym(2, 2);
    nonsym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(SubRiemannianStructure(g, Mat::Identity(3, 2), nonsym), SpecError);
  }

  TEST_CASE("asymptotic structure") {
    const auto& S = spec("heisenberg_riemannian");
    CHECK_FALSE(S.is_carnot());
    CHECK(S.drift_basis().cols() == 1);
    auto A = asymptotic_structure(S);
    CHECK(A.is_carnot());
    CHECK(A.rank() == 2);
    CHECK((A.abelian_gram() - S.abelian_gram()).norm() < 1e-12);
    const auto& H = spec("hxr_riemannian");
    CHECK(asymptotic_structure(H).rank() == 3);
    CHECK(asymptotic_structure(spec("free23")).rank() == 3);
  }

  TEST_CASE("abelianization norm") {
    const auto& S = spec("heisenberg");
    CHECK(abelianization_norm(S, v({3, 4})) == doctest::Approx(5.0));
    CHECK(sup(abelian_projection(S.algebra(), v({1, 2, 3})) - v({1, 2})) == 0.0);
    CHECK_THROWS_AS(abelianization_norm(S, v({1})), SpecError);
  }

  TEST_CASE("automorphisms") {
    const auto& S = spec("heisenberg");
    const auto& g = S.algebra();
    Mat rot(3, 3);
    double c = std::cos(0.4), s = std::sin(0.4);
    rot << c, -s, 0, s, c, 0, 0, 0, 1;
    auto A = make_automorphism(g, rot);
    Vec p = v({1, 2, 3}), q = v({-0.5, 1, 2});
    CHECK(sup(A.apply(multiply(g, p, q)) - multiply(g, A.apply(p), A.apply(q))) < 1e-12);
    Mat bad = Mat::Identity(3, 3);
    bad(2, 2) = 2.0;
    CHECK_THROWS_AS(make_automorphism(g, bad), SpecError);

    Mat L(1, 2);
    L << 0.3, -1.2;
    auto sh = shear_automorphism(S, L);
    CHECK(sup(sh.apply(v({1, 1, 0})) - v({1, 1, -0.9})) < 1e-14);

    const auto& hr = spec("hxr_riemannian");
    Mat L2 = Mat::Zero(1, 3);
    L2(0, 2) = 1.0;
    auto sh2 = shear_automorphism(hr, L2);
    CHECK(sup(sh2.apply(v({0, 0, 0, 2})) - v({0, 0, 2, 2})) == 0.0);
  }

  TEST_CASE("graph isometry") {
    const auto& S = spec("heisenberg");
    Mat H2(3, 2);
    H2 << 1, 0, 0, 1, 0.5, -2;
    SubRiemannianStructure S2(S.algebra_ptr(), H2, Mat::Identity(2, 2));
    auto F = graph_isometry(S, S2);
    CHECK(sup(F.apply(v({1, 0, 0})) - v({1, 0, 0.5})) < 1e-14);
    CHECK(sup(F.apply(v({0, 1, 0})) - v({0, 1, -2})) < 1e-14);
    SubRiemannianStructure S3(S.algebra_ptr(), H2, 4.0 * Mat::Identity(2, 2));
    CHECK_THROWS_AS(graph_isometry(S, S3), NoIsometry);
  }

  TEST_CASE("dilation is a homomorphism") {
    for (const char* name : {"heisenberg", "free23", "engel_riemannian"}) {
      const auto& g = spec(name).algebra();
      Rng rng(11);
      Vec p = gaussian_vector(rng, g.dim()), q = gaussian_vector(rng, g.dim());
      Vec lhs = dilate(g, multiply(g, p, q), 2.5);
      Vec rhs = multiply(g, dilate(g, p, 2.5), dilate(g, q, 2.5));
      CHECK(sup(lhs - rhs) < 1e-10 * std::max(1.0, sup(lhs)));
    }
  }
}
