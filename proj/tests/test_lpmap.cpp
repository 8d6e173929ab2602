#include "doctest.h"
#include "helpers.hpp"
#include "polyqr/lpmap.hpp"

using namespace polyqr;
using namespace testutil;

namespace {

// det(A_{1..k}^H A_{1..k})
double gram_det(const CMat& A, int k) {
    const CMat Ak = A.leftCols(k);
    return (Ak.adjoint() * Ak).determinant().real();
}

// cofactor expansion: sum_i (-1)^{k+i} det(A_{1..k-1}^H A_{1..k \ i}) a_i
CVec cofactor_q(const CMat& A, int k) {
    if (k == 1) return A.col(0);
    CVec q = CVec::Zero(A.rows());
    const CMat Ah = A.leftCols(k - 1).adjoint();
    for (int i = 1; i <= k; ++i) {
        CMat S(A.rows(), k - 1);
        int c = 0;
        for (int j = 1; j <= k; ++j)
            if (j != i) S.col(c++) = A.col(j - 1);
        const double sign = (k + i) % 2 ? -1.0 : 1.0;
        q += sign * (Ah * S).determinant() * A.col(i - 1);
    }
    return q;
}

std::vector<UnitCirclePoint> grid_points(const std::vector<int>& t, int N) {
    std::vector<UnitCirclePoint> p;
    for (int n : t) p.push_back(tone_point(n, N));
    return p;
}

}  // namespace

TEST_CASE("forward mapping examples") {
    const CMat I = CMat::Identity(3, 3);
    const auto mf = map_forward(givens_qr(I), 1, 1.0, &I);
    CHECK(max_abs(mf.Qtilde - I) < 1e-15);
    CHECK(max_abs(mf.Rtilde - I) < 1e-15);
    for (double d : mf.delta) CHECK(d == 1.0);

    CMat a(2, 1);
    a << 3, 4;
    const auto f = gs_qr(a);
    const auto m1 = map_forward(f.Q, f.R, std::nullopt, nullptr);
    CHECK(max_abs(m1.Qtilde - a) < 1e-14);
    CHECK(std::abs(m1.Rtilde(0, 0) - 25.0) < 1e-13);
    CHECK(std::abs(m1.delta[0] - 25.0) < 1e-13);
    const CVec a1 = a.col(0);
    const auto m2 = map_forward(f.Q, f.R, std::nullopt, &a1);
    CHECK(max_abs(m2.Qtilde - a) == 0.0);
}

TEST_CASE("inverse mapping scaling") {
    MappedFactors mf;
    mf.Qtilde = CMat::Constant(2, 1, cd(2, 0));
    mf.Rtilde = CMat::Constant(1, 1, cd(4, 0));
    mf.delta = {4};
    const auto f = map_inverse(mf);
    CHECK(std::abs(f.R(0, 0) - 2.0) < 1e-15);
    CHECK(max_abs(f.Q - CMat::Ones(2, 1)) < 1e-15);
}

TEST_CASE("mapping identities against determinant oracles") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const CMat A = random_matrix(rng, 4, 4);
        const auto f = givens_qr(A);
        std::int64_t mults = 0;
        const auto mf = map_forward(f.Q, f.R, std::nullopt, nullptr, &mults);
        CHECK(mults > 0);
        for (int k = 1; k <= 4; ++k) {
            const double D = gram_det(A, k);
            CHECK(std::abs(mf.delta[k - 1] - D) < 1e-8 * D);
            CHECK(std::abs(mf.Rtilde(k - 1, k - 1) - D) < 1e-8 * D);
            CHECK(rel_err(mf.Qtilde.col(k - 1), cofactor_q(A, k)) < 1e-8);
        }
        // r~_k^T = q~_k^H A
        const CMat RA = mf.Qtilde.adjoint() * A;
        CHECK(rel_err(mf.Rtilde.triangularView<Eigen::Upper>().toDenseMatrix(),
                      RA.triangularView<Eigen::Upper>().toDenseMatrix()) < 1e-10);
    }
}

TEST_CASE("roundtrip") {
    std::mt19937_64 rng(9);
    for (auto [P, M] : {std::pair{2, 2}, std::pair{4, 2}, std::pair{4, 4}, std::pair{6, 3}})
        for (int t = 0; t < 20; ++t) {
            const CMat A = random_matrix(rng, P, M);
            const auto f = givens_qr(A);
            const auto back = map_inverse(map_forward(f.Q, f.R));
            CHECK(max_abs(back.Q - f.Q) < 1e-9);
            CHECK(max_abs(back.R - f.R) < 1e-9);
        }
}

TEST_CASE("column-range slices") {
    std::mt19937_64 rng(10);
    const CMat A = random_matrix(rng, 5, 4);
    const auto f = givens_qr(A);
    const auto full = map_forward(f.Q, f.R);
    for (int k0 = 2; k0 <= 4; ++k0) {
        const int m = 4 - k0 + 1;
        const double prefix = full.delta[k0 - 2];
        const auto s = map_forward(f, k0, prefix);
        CHECK_FALSE(s.leading);
        CHECK(rel_err(s.Qtilde, full.Qtilde.rightCols(m)) < 1e-12);
        CHECK(rel_err(s.Rtilde, full.Rtilde.bottomRightCorner(m, m)) < 1e-12);
        const auto back = map_inverse(s);
        CHECK(max_abs(back.Q - f.Q.rightCols(m)) < 1e-9);
        CHECK(max_abs(back.R - f.R.bottomRightCorner(m, m)) < 1e-9);
    }
    // trapezoidal rows k0.. over columns k0..M
    const auto tr = map_forward(f.Q.middleCols(1, 2), f.R.block(1, 1, 2, 3), full.delta[0]);
    CHECK(rel_err(tr.Rtilde, full.Rtilde.block(1, 1, 2, 3)) < 1e-12);
    const auto trb = map_inverse(tr);
    CHECK(max_abs(trb.R - f.R.block(1, 1, 2, 3)) < 1e-9);
    CHECK_THROWS_AS(map_forward(f.Q.leftCols(2), f.R.topLeftCorner(3, 3)), Error);
}

TEST_CASE("rank-deficient recovery") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        CMat A = random_matrix(rng, 4, 3);
        A.col(1) = A.col(0) * cd(0.3, -1.2);  // K = 1
        const auto f = givens_qr(A);
        const auto mf = map_forward(f.Q, f.R);
        CHECK(mf.delta[1] < 1e-20 * mf.delta[0] * mf.delta[0]);
        int K = -1;
        const auto g = map_inverse(mf, [&] { return A; }, nullptr, {}, &K);
        CHECK(K == 1);
        const auto c = check_qr(A, g.Q, g.R);
        CHECK(c.orthonormality < 1e-10);
        CHECK(c.triangularity == 0.0);
        CHECK(c.diag_imag == 0.0);
        CHECK(c.diag_negative <= 1e-12);
        CHECK(c.residual < 1e-10 * A.norm());
        CHECK(rel_err(g.Q * g.R, A) < 1e-10);
        CHECK(max_abs(g.Q.col(0) - f.Q.col(0)) < 1e-9);
        // trailing factors are the QR of the reduced matrix
        CMat red = A.rightCols(2) - g.Q.col(0) * g.R.block(0, 1, 1, 2);
        const auto direct = gs_qr(red, 1e-10, A.norm());
        CHECK(max_abs(g.Q.rightCols(2) - direct.Q) < 1e-9);
        CHECK(max_abs(g.R.bottomRightCorner(2, 2) - direct.R) < 1e-9);
        try {
            map_inverse(mf);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::missing_data);
        }
    }
    // K = 0: first column zero
    CMat A = random_matrix(rng, 3, 2);
    A.col(0).setZero();
    const auto f = givens_qr(A);
    int K = -1;
    const auto g = map_inverse(map_forward(f.Q, f.R), [&] { return A; }, nullptr, {}, &K);
    CHECK(K == 0);
    CHECK(rel_err(g.Q * g.R, A) < 1e-10);
    CHECK(check_qr(A, g.Q, g.R).orthonormality < 1e-10);
}

TEST_CASE("mapped factors are laurent polynomials of bounded degree") {
    std::mt19937_64 rng(12);
    const int L = 2, MR = 4, MT = 3, N = 64;
    const auto H = random_lp(rng, 0, L, MR, MT);
    std::vector<MappedFactors> mapped;
    for (int n = 0; n < N; ++n) {
        const CMat Hn = H.eval(tone_point(n, N));
        const auto f = givens_qr(Hn);
        mapped.push_back(map_forward(f.Q, f.R));
    }
    std::vector<int> even, odd;
    for (int n = 0; n < N; ++n) (n % 2 ? odd : even).push_back(n);
    const auto pe = grid_points(even, N);
    for (int k = 1; k <= MT; ++k) {
        struct Deg { int v1, v2; };
        // widened symmetric bound for q~_k and r~_k, and the tight bound for q~_k
        for (auto [which, d] : {std::pair{0, Deg{k * L, k * L}}, std::pair{1, Deg{k * L, k * L}},
                                std::pair{0, Deg{(k - 1) * L, k * L}}}) {
            std::vector<CMat> s;
            auto pick = [&](const MappedFactors& m) -> CMat {
                return which == 0 ? CMat(m.Qtilde.col(k - 1)) : CMat(m.Rtilde.row(k - 1));
            };
            for (int n : even) s.push_back(pick(mapped[n]));
            const auto fit = fit_from_samples(pe, s, d.v1, d.v2);
            for (int n : odd) CHECK(rel_err(fit.eval(tone_point(n, N)), pick(mapped[n])) < 1e-8);
        }
        // one degree short of the bound does not fit
        if (k == MT) {
            std::vector<CMat> s;
            for (int n : even) s.push_back(mapped[n].Qtilde.col(k - 1));
            const auto fit = fit_from_samples(pe, s, (k - 1) * L, k * L - 1);
            double worst = 0;
            for (int n : odd)
                worst = std::max(worst, rel_err(fit.eval(tone_point(n, N)), mapped[n].Qtilde.col(k - 1)));
            CHECK(worst > 1e-4);
        }
    }
}
