#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyqr/algos.hpp"

namespace polyqr {

enum class QRCostKind { ZF, MMSE_REG, MMSE_AUG };

// Maximum number of nonzero entries in Q_{1..k} and R_{1..k} (rows of R).
std::int64_t j_k(int M_R, int M_T, int k);

// Givens QR in full-multiplication equivalents: plain, regularized, augmented (full Qbar).
Rational qr_cost(int P, int M, QRCostKind kind);

struct CostParams {
    int M_T = 1;
    int M_R = 1;
    int L = 0;
    int N = 1;
    int D = 1;
    Rational c_IP_H{2};
    Rational c_IP_QR{2};
    Rational chi_R = kChiR;
    Rational chi_C = kChiC;
    Schedule schedule = Schedule::exact_minimal;
    std::vector<int> explicit_B;  // overrides the schedule when non-empty
    int known_tones = 0;          // |E| tones inside I_1 whose channel is never interpolated

    std::vector<int> B() const;
    void validate() const;
};

CostParams cost_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostParams& p);

// Per-tone task costs, index k-1 for k = 1..M_T.
struct TaskCosts {
    std::vector<Rational> ip_H;   // M_R (M_T - k + 1) c_IP_H
    std::vector<Rational> ip_qr;  // (M_R + M_T - k + 1) c_IP_QR, one column/row pair
    Rational ip_QR;               // J_{M_T} c_IP_QR
    std::vector<Rational> qr;     // c_QR of M_R x k
    std::vector<Rational> map;    // c_M^{k, M_T}
    std::vector<Rational> demap;  // c_M^{-1}^{1, k}
    std::vector<Rational> red;    // reduction at iteration k
};
TaskCosts task_costs(const CostParams& p);

struct CostReport {
    Algorithm algorithm = Algorithm::I;
    Rational interp_H{0};
    Rational interp_QR{0};
    Rational qr{0};
    Rational map{0};
    Rational demap{0};
    Rational reduction{0};

    Rational total() const { return interp_H + interp_QR + qr + map + demap + reduction; }
};
CostReport total_cost(const CostParams& p, Algorithm a);

struct BreakEven {
    Rational c_IP_max_II{0};
    std::optional<Rational> c_IP_max_III;  // undefined for M_T = 1
    Rational delta_c_QR{0};
    Rational delta_c_map{0};
    Rational delta_c_IP{0};
    Rational c_red_III{0};
};
// Closed forms for the exact_minimal schedule with a single c_IP (= c_IP_QR).
BreakEven break_even(const CostParams& p);

struct SweepRow {
    CostParams params;
    CostReport report;
    Rational ratio_to_I{0};
};
std::vector<SweepRow> sweep(const std::vector<CostParams>& grid, const std::vector<Algorithm>& algs);

// The twelve reference II-versus-I configurations (M_R = 4, L = 15, D = N = 512, c_IP_H = 2,
// pow2 schedule, 16 known tones), c_IP_QR set by the interpolation engine of each row.
std::vector<CostParams> table2_grid();

// "24/7", "3", "0.75" or "-1.5" as an exact rational.
Rational parse_rational(const std::string& s);
std::string to_string(const Rational& r);

// Decimal string rounded half-to-even.
std::string round_half_even(const Rational& x, int decimals = 2);
// x rounded half-to-even to `decimals` places, as an exact rational.
Rational round_half_even_value(const Rational& x, int decimals = 2);

}  // namespace polyqr
