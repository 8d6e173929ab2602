#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "polyqr/cost.hpp"

using namespace polyqr;
using namespace testutil;

namespace {

CostParams table2(int MT, const Rational& c_qr) {
    CostParams p;
    p.M_T = MT;
    p.M_R = 4;
    p.L = 15;
    p.N = p.D = 512;
    p.c_IP_H = 2;
    p.c_IP_QR = c_qr;
    p.schedule = Schedule::pow2;
    p.known_tones = 16;
    return p;
}

CostParams minimal(int MT, int MR, int L, int D, const Rational& c) {
    CostParams p;
    p.M_T = MT;
    p.M_R = MR;
    p.L = L;
    p.N = std::max(D, 1024);
    p.D = D;
    p.c_IP_H = p.c_IP_QR = c;
    return p;
}

std::vector<int> range(int a, int b) {
    std::vector<int> v(static_cast<size_t>(b - a));
    std::iota(v.begin(), v.end(), a);
    return v;
}

}  // namespace

TEST_CASE("closed-form counts") {
    CHECK(j_k(4, 2, 2) == 11);
    CHECK(j_k(4, 4, 4) == 26);
    for (int MR = 1; MR <= 6; ++MR)
        for (int MT = 1; MT <= MR; ++MT) CHECK(j_k(MR, MT, 1) == MR + MT);
    CHECK(qr_cost(4, 2, QRCostKind::ZF) == Rational(55));
    CHECK(qr_cost(1, 1, QRCostKind::ZF) == Rational(1));
    CHECK(qr_cost(4, 4, QRCostKind::MMSE_REG) == Rational(186));
    CHECK_THROWS_AS(j_k(4, 2, 3), Error);
    CHECK_THROWS_AS(qr_cost(2, 3, QRCostKind::ZF), Error);
}

TEST_CASE("per-tone task costs") {
    const auto t = task_costs(minimal(2, 4, 15, 512, 2));
    CHECK(t.ip_H[0] == Rational(16));
    CHECK(t.map[0] == Rational(8));
    CHECK(t.demap[1] == Rational(11));
    CHECK(t.red[0] == Rational(0));
    CHECK(t.ip_QR == Rational(22));
    for (int MT = 1; MT <= 4; ++MT) CHECK(task_costs(minimal(MT, 5, 3, 100, 1)).red[0] == Rational(0));
}

TEST_CASE("parameter validation") {
    auto p = minimal(2, 4, 15, 512, 2);
    p.D = 40;
    CHECK_THROWS_WITH_AS(total_cost(p, Algorithm::II), doctest::Contains("exceeds D"), Error);
    try {
        total_cost(p, Algorithm::II);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible);
    }
    p = minimal(3, 2, 1, 50, 1);
    CHECK_THROWS_AS(total_cost(p, Algorithm::I), Error);
    p = minimal(2, 4, 1, 50, 1);
    p.explicit_B = {3};
    CHECK_THROWS_AS(task_costs(p), Error);
}

TEST_CASE("table of II versus I ratios") {
    struct Row { int MT; Rational c; const char* ratio; };
    const Row rows[] = {{2, {24, 7}, "0.74"}, {2, 4, "0.82"}, {2, 2, "0.55"}, {2, 1, "0.41"},
                        {2, {3, 4}, "0.37"}, {2, {1, 2}, "0.34"}, {4, {14, 3}, "1.08"}, {4, 8, "1.54"},
                        {4, 2, "0.71"}, {4, {3, 2}, "0.64"}, {4, 1, "0.57"}, {4, {1, 2}, "0.50"}};
    for (const Row& r : rows) {
        const auto p = table2(r.MT, r.c);
        CHECK(p.B().back() == (r.MT == 2 ? 64 : 128));
        const Rational q = total_cost(p, Algorithm::II).total() / total_cost(p, Algorithm::I).total();
        const Rational got = round_half_even_value(q), want = parse_rational(r.ratio);
        CAPTURE(round_half_even(q));
        CHECK(boost::abs(got - want) <= Rational(1, 100));
    }
}

TEST_CASE("break-even closed forms") {
    const auto b = break_even(minimal(2, 4, 15, 512, 2));
    CHECK(b.c_IP_max_II == Rational(44, 3));
    CHECK(b.delta_c_IP == Rational(-120));
    CHECK(!break_even(minimal(1, 4, 15, 512, 2)).c_IP_max_III.has_value());

    const auto diff = [](const CostParams& p, Algorithm a, Algorithm b2) {
        return total_cost(p, a).total() - total_cost(p, b2).total();
    };
    for (int MT = 2; MT <= 4; ++MT)
        for (int MR = MT; MR <= 6; ++MR)
            for (int L : {1, 4, 15}) {
                CAPTURE(MT); CAPTURE(MR); CAPTURE(L);
                const auto p = minimal(MT, MR, L, 600, 2);
                const auto be = break_even(p);
                // C_II - C_III assembled from the task rows equals the closed-form deltas
                CHECK(diff(p, Algorithm::II, Algorithm::III) ==
                      be.delta_c_QR + be.delta_c_map + be.delta_c_IP - be.c_red_III);
                CHECK(diff(minimal(MT, MR, L, 300, 2), Algorithm::II, Algorithm::III) ==
                      diff(p, Algorithm::II, Algorithm::III));
                // proportional to L
                const auto p2 = minimal(MT, MR, 2 * L, 600, 2);
                CHECK(diff(p2, Algorithm::II, Algorithm::III) == Rational(2) * diff(p, Algorithm::II, Algorithm::III));
                // C_I - C_II is affine in D
                const Rational d1 = diff(minimal(MT, MR, L, 200, 2), Algorithm::I, Algorithm::II);
                const Rational d2 = diff(minimal(MT, MR, L, 400, 2), Algorithm::I, Algorithm::II);
                const Rational d3 = diff(minimal(MT, MR, L, 800, 2), Algorithm::I, Algorithm::II);
                CHECK(d3 - d2 == Rational(2) * (d2 - d1));
                // the sign of C_III - C_II flips at c_IP_max_III
                REQUIRE(be.c_IP_max_III.has_value());
                const Rational cmax = *be.c_IP_max_III;
                if (cmax > Rational(0)) {
                    const Rational lo = diff(minimal(MT, MR, L, 600, cmax * Rational(9, 10)), Algorithm::III, Algorithm::II);
                    const Rational hi = diff(minimal(MT, MR, L, 600, cmax * Rational(11, 10)), Algorithm::III, Algorithm::II);
                    const Rational at = diff(minimal(MT, MR, L, 600, cmax), Algorithm::III, Algorithm::II);
                    CHECK(lo < Rational(0));
                    CHECK(hi > Rational(0));
                    CHECK(at == Rational(0));
                }
            }
    // c_IP below c_IP_max_II makes II cheaper once D is large enough
    const auto p = minimal(2, 4, 15, 20000, Rational(44, 3) * Rational(9, 10));
    CHECK(total_cost(p, Algorithm::II).total() < total_cost(p, Algorithm::I).total());
}

TEST_CASE("sweep trends") {
    CostParams base;
    base.L = 15;
    base.N = 512;
    base.D = 500;
    base.schedule = Schedule::pow2;
    std::vector<CostParams> grid;
    for (int MT = 2; MT <= 4; ++MT)
        for (int MR = MT; MR <= 6; ++MR) {
            CostParams p = base;
            p.M_T = MT;
            p.M_R = MR;
            grid.push_back(p);
        }
    const auto rows = sweep(grid, {Algorithm::I, Algorithm::II, Algorithm::III});
    REQUIRE(rows.size() == grid.size() * 3);
    Rational best_II(0), best_III(0);
    for (const auto& r : rows) {
        if (r.report.algorithm == Algorithm::I) CHECK(r.ratio_to_I == Rational(1));
        if (r.report.algorithm == Algorithm::II) best_II = std::max(best_II, Rational(1) - r.ratio_to_I);
        if (r.report.algorithm == Algorithm::III) best_III = std::max(best_III, Rational(1) - r.ratio_to_I);
        if (r.params.M_T == 3 && r.params.M_R == 4 && r.report.algorithm == Algorithm::I) {
            const Rational cI = r.report.total();
            const Rational cII = total_cost(r.params, Algorithm::II).total();
            const Rational cIII = total_cost(r.params, Algorithm::III).total();
            CHECK(cIII < cII);
            CHECK(cII < cI);
        }
    }
    MESSAGE("best savings II " << round_half_even(best_II) << ", III " << round_half_even(best_III));
    CHECK(best_II >= Rational(45, 100));
    CHECK(best_III >= Rational(60, 100));
}

TEST_CASE("rounding and parsing") {
    CHECK(round_half_even(Rational(1, 8)) == "0.12");
    CHECK(round_half_even(Rational(3, 8)) == "0.38");
    CHECK(round_half_even(Rational(-1, 8)) == "-0.12");
    CHECK(round_half_even(Rational(-3, 8)) == "-0.38");
    CHECK(round_half_even(Rational(5, 2), 0) == "2");
    CHECK(round_half_even(Rational(7, 2), 0) == "4");
    CHECK(round_half_even(Rational(1, 3)) == "0.33");
    CHECK(round_half_even(Rational(-1, 300)) == "0.00");
    CHECK(round_half_even_value(Rational(2, 3)) == Rational(67, 100));
    CHECK(parse_rational("24/7") == Rational(24, 7));
    CHECK(parse_rational("0.75") == Rational(3, 4));
    CHECK(parse_rational("-1.5") == Rational(-3, 2));
    CHECK(parse_rational("3") == Rational(3));
    CHECK_THROWS_AS(parse_rational("1/0"), Error);
    CHECK_THROWS_AS(parse_rational("abc"), Error);
}

TEST_CASE("json parameters") {
    const auto p = cost_params_from_json(nlohmann::json::parse(
        R"({"M_T":2,"M_R":4,"L":15,"N":512,"D":512,"c_IP_H":2,"c_IP_QR":"24/7","schedule":"pow2","known_tones":16})"));
    CHECK(p.c_IP_QR == Rational(24, 7));
    CHECK(p.schedule == Schedule::pow2);
    const auto q = cost_params_from_json(to_json(p));
    CHECK(total_cost(q, Algorithm::II).total() == total_cost(p, Algorithm::II).total());
    try {
        cost_params_from_json(nlohmann::json::parse(R"({"M_T":2,"bogus":1})"));
        FAIL("unknown key accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::schema);
    }
}

TEST_CASE("instrumented counts match the cost model") {
    std::mt19937_64 rng(51);
    struct Cfg { int MT, MR, L, D; std::vector<int> E; };
    const int N = 64;
    for (const Cfg& c : {Cfg{3, 4, 2, 61, {61, 62, 63}}, Cfg{2, 4, 3, 31, {33, 41, 49, 57}},
                         Cfg{1, 3, 2, 40, {50, 55, 60}}, Cfg{4, 4, 1, 50, {52, 60}}, Cfg{2, 3, 2, 40, {44, 48, 52, 56, 60}}}) {
        CAPTURE(c.MT); CAPTURE(c.MR);
        const auto H = random_lp(rng, 0, c.L, c.MR, c.MT);
        const auto t = build_tone_sets(N, range(0, c.D), c.E, c.L, c.MT, Schedule::exact_minimal);
        std::vector<CMat> HE;
        for (int n : c.E) HE.push_back(H.eval(tone_point(n, N)));
        CostParams p;
        p.M_T = c.MT;
        p.M_R = c.MR;
        p.L = c.L;
        p.N = N;
        p.D = c.D;
        p.c_IP_H = p.c_IP_QR = 1;  // per-target count of interpolated entries
        AlgoConfig cfg;
        cfg.sigma_w = 0.3;
        for (Algorithm a : {Algorithm::I, Algorithm::II, Algorithm::III, Algorithm::I_MMSE, Algorithm::II_MMSE,
                            Algorithm::III_MMSE}) {
            const std::string name = to_string(a);
            CAPTURE(name);
            const auto f = run_algorithm(a, HE, t, c.L, cfg);
            const auto r = total_cost(p, a);
            REQUIRE(f.fallback_tones.empty());
            CHECK(Rational(f.counts.qr) == r.qr);
            CHECK(Rational(f.counts.map) == r.map);
            CHECK(Rational(f.counts.demap) == r.demap);
            CHECK(Rational(f.counts.reduction) == r.reduction);
            CHECK(Rational(f.counts.ip_H_evals) == r.interp_H);
            CHECK(Rational(f.counts.ip_QR_evals) == r.interp_QR);
            CHECK(f.counts.qcheck_evals == 0);
        }
    }
}
