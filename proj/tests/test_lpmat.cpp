#include "doctest.h"
#include "helpers.hpp"

using namespace polyqr;
using namespace testutil;

TEST_CASE("tone points") {
    CHECK(tone_point(0, 8).value == cd(1, 0));
    CHECK(std::abs(tone_point(2, 8).value - cd(0, 1)) == 0.0);
    const auto p = tone_point(5, 512);
    CHECK(std::abs(p.value - std::exp(cd(0, 2 * kPi * 5 / 512))) < 1e-15);
    CHECK(p.tone_index == 5);
    CHECK(p.grid_size == 512);
    CHECK_THROWS_AS(tone_point(8, 8), Error);
    CHECK_THROWS_AS(tone_point(-1, 8), Error);
    CHECK_THROWS_AS(unit_point(cd(1.1, 0)), Error);
}

TEST_CASE("evaluation") {
    std::mt19937_64 rng(7);
    const CMat A0 = random_matrix(rng, 2, 3);
    LaurentPolyMatrix c(0, 0, {A0});
    CHECK(max_abs(c.eval(tone_point(3, 7)) - A0) == 0.0);

    LaurentPolyMatrix a(0, 1, {CMat::Zero(1, 1), CMat::Ones(1, 1)});
    CHECK(std::abs(a.eval(cd(0, 1))(0, 0) - cd(0, -1)) < 1e-15);

    // DFT oracle: A(s_n) is the 8-point DFT of the coefficient sequence placed at v mod 8
    const auto lp = random_lp(rng, 1, 2, 2, 2);
    for (int n = 0; n < 8; ++n) {
        CMat X = CMat::Zero(2, 2);
        for (int m = 0; m < 8; ++m) {
            const int v = m <= 2 ? m : m - 8;
            if (v < -1 || v > 2) continue;
            X += lp.coeff(v) * std::exp(cd(0, -2 * kPi * n * m / 8.0));
        }
        CHECK(rel_err(lp.eval(tone_point(n, 8)), X) < 1e-13);
    }
}

TEST_CASE("fit from samples") {
    std::mt19937_64 rng(11);
    SUBCASE("constant") {
        const CMat c = random_matrix(rng, 2, 2);
        const auto fit = fit_from_samples({tone_point(1, 5)}, {c}, 0, 0);
        CHECK(rel_err(fit.coeff(0), c) < 1e-15);
    }
    SUBCASE("roundtrip and overdetermined") {
        const auto lp = random_lp(rng, 2, 3, 3, 2);
        const int V = lp.max_degree();
        std::vector<UnitCirclePoint> pts, pts2;
        std::vector<CMat> s, s2;
        for (int n = 0; n <= V; ++n) {
            pts.push_back(tone_point(n, V + 1));
            s.push_back(lp.eval(pts.back()));
        }
        for (int n = 0; n < 2 * (V + 1); ++n) {
            pts2.push_back(tone_point(n, 2 * (V + 1)));
            s2.push_back(lp.eval(pts2.back()));
        }
        const auto f1 = fit_from_samples(pts, s, 2, 3);
        const auto f2 = fit_from_samples(pts2, s2, 2, 3);
        for (int v = -2; v <= 3; ++v) {
            CHECK(rel_err(f1.coeff(v), lp.coeff(v)) < 1e-10);
            CHECK(rel_err(f2.coeff(v), f1.coeff(v)) < 1e-9);
        }
        for (size_t i = 0; i < pts.size(); ++i) CHECK(rel_err(f1.eval(pts[i]), s[i]) < 1e-10);
    }
    SUBCASE("errors") {
        const CMat c = CMat::Ones(1, 1);
        CHECK_THROWS_AS(fit_from_samples({tone_point(1, 4), tone_point(1, 4)}, {c, c}, 0, 1), Error);
        try {
            fit_from_samples({tone_point(1, 4), tone_point(1, 4)}, {c, c}, 0, 1);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::degenerate);
        }
        // tightly clustered points with a high degree are hopelessly ill-conditioned
        std::vector<UnitCirclePoint> pts;
        std::vector<CMat> s;
        for (int n = 0; n < 12; ++n) {
            pts.push_back(tone_point(n, 100000));
            s.push_back(c);
        }
        try {
            fit_from_samples(pts, s, 0, 11);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::conditioning);
        }
    }
}

TEST_CASE("equidistant pseudoinverse is scaled adjoint") {
    const int V1 = 3, B = 7;
    std::vector<cd> pts;
    for (int n = 0; n < B; ++n) pts.push_back(tone_point(n, B).value);
    const CMat Bm = point_matrix(pts, V1, V1);
    CHECK(max_abs(pseudo_inverse(Bm) - Bm.adjoint() / B) < 1e-12);
}

TEST_CASE("degree algebra and hermitian law") {
    const int L = 4;
    CHECK(degree_of_product({0, L}, {L, 0}) == Degree{L, L});
    CHECK(degree_of_hermitian({0, L}) == Degree{L, 0});
    CHECK(degree_of_sum({1, 2}, {3, 0}) == Degree{3, 2});

    std::mt19937_64 rng(3);
    const auto lp = random_lp(rng, 1, 3, 2, 3);
    const auto h = lp.hermitian();
    CHECK(h.v1() == 3);
    CHECK(h.v2() == 1);
    std::vector<UnitCirclePoint> pts;
    std::vector<CMat> s;
    for (int n = 0; n < 5; ++n) {
        pts.push_back(tone_point(n, 5));
        s.push_back(lp.eval(pts.back()).adjoint());
    }
    const auto fit = fit_from_samples(pts, s, 3, 1);
    for (int v = -3; v <= 1; ++v) CHECK(rel_err(fit.coeff(v), lp.coeff(-v).adjoint()) < 1e-10);
    for (int n = 0; n < 9; ++n)
        CHECK(rel_err(h.eval(tone_point(n, 9)), lp.eval(tone_point(n, 9)).adjoint()) < 1e-12);
}

TEST_CASE("json roundtrip") {
    std::mt19937_64 rng(5);
    const auto lp = random_lp(rng, 1, 2, 2, 3);
    const auto back = lp_from_json(to_json(lp));
    for (int v = -1; v <= 2; ++v) CHECK(max_abs(back.coeff(v) - lp.coeff(v)) == 0.0);
    auto j = to_json(lp);
    j["extra"] = 1;
    CHECK_THROWS_AS(lp_from_json(j), Error);
}
