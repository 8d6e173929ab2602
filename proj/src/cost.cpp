#include "polyqr/cost.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace polyqr {

namespace {

Rational R(std::int64_t v) { return Rational(v); }

Rational json_rational(const nlohmann::json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number()) {
        const double x = v.get<double>();
        const std::int64_t scaled = std::llround(x * 1e6);
        if (std::abs(x * 1e6 - static_cast<double>(scaled)) > 1e-6)
            fail(ErrorKind::schema, "give non-terminating rationals as \"p/q\" strings");
        return Rational(scaled, 1000000);
    }
    fail(ErrorKind::schema, "expected a number or a \"p/q\" string");
}

}  // namespace

std::int64_t j_k(int M_R, int M_T, int k) {
    if (k < 1 || k > M_T) fail(ErrorKind::parameter, "k out of range");
    const std::int64_t K = k;
    return static_cast<std::int64_t>(M_R) * K + static_cast<std::int64_t>(M_T) * K - (K - 1) * K / 2;
}

Rational qr_cost(int P, int M, QRCostKind kind) {
    if (M < 1 || P < M) fail(ErrorKind::parameter, "qr_cost needs P >= M >= 1");
    const Rational p(P), m(M), half(1, 2), three_half(3, 2);
    const Rational mmse = three_half * (p * p * m + p * m * m) - half * p * p + half * p;
    switch (kind) {
        case QRCostKind::ZF:
            return three_half * (p * p * m + p * m * m) - m * m * m - half * (p * p - p + m * m + m);
        case QRCostKind::MMSE_REG: return mmse;
        case QRCostKind::MMSE_AUG: return mmse + three_half * p * m * m + half * p * m;
    }
    fail(ErrorKind::parameter, "unknown QR cost kind");
}

std::vector<int> CostParams::B() const {
    if (!explicit_B.empty()) return explicit_B;
    return base_sizes(L, M_T, schedule);
}

void CostParams::validate() const {
    if (M_T < 1 || M_R < M_T) fail(ErrorKind::parameter, "need M_R >= M_T >= 1");
    if (L < 0) fail(ErrorKind::parameter, "need L >= 0");
    if (D < 1) fail(ErrorKind::infeasible, "no data tones");
    if (D > N) fail(ErrorKind::parameter, "need D <= N");
    if (c_IP_H < Rational(0) || c_IP_QR < Rational(0)) fail(ErrorKind::parameter, "interpolation costs must be nonnegative");
    if (!explicit_B.empty() && static_cast<int>(explicit_B.size()) != M_T)
        fail(ErrorKind::parameter, "explicit schedule needs one base-set size per k");
    const auto b = B();
    for (size_t k = 0; k < b.size(); ++k) {
        if (b[k] < 1 || (k > 0 && b[k] < b[k - 1]))
            fail(ErrorKind::parameter, "base-set sizes must be positive and nondecreasing");
        if (b[k] > D) fail(ErrorKind::infeasible, "base-set size " + std::to_string(b[k]) + " exceeds D");
    }
    if (known_tones < 0 || known_tones > b.front())
        fail(ErrorKind::parameter, "known tones must lie within the first base set");
}

CostParams cost_params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::schema, "cost parameters must be a JSON object");
    static const std::set<std::string> keys = {"M_T", "M_R", "L", "N", "D", "c_IP_H", "c_IP_QR",
                                               "chi_R", "chi_C", "schedule", "B", "known_tones"};
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) fail(ErrorKind::schema, "unknown cost parameter '" + k + "'");
    CostParams p;
    try {
        p.M_T = j.value("M_T", p.M_T);
        p.M_R = j.value("M_R", p.M_R);
        p.L = j.value("L", p.L);
        p.N = j.value("N", p.N);
        p.D = j.value("D", p.N);
        if (j.contains("c_IP_H")) p.c_IP_H = json_rational(j["c_IP_H"]);
        if (j.contains("c_IP_QR")) p.c_IP_QR = json_rational(j["c_IP_QR"]);
        if (j.contains("chi_R")) p.chi_R = json_rational(j["chi_R"]);
        if (j.contains("chi_C")) p.chi_C = json_rational(j["chi_C"]);
        if (j.contains("schedule")) p.schedule = schedule_from_string(j["schedule"].get<std::string>());
        if (j.contains("B")) p.explicit_B = j["B"].get<std::vector<int>>();
        p.known_tones = j.value("known_tones", 0);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::schema, std::string("cost parameters: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const CostParams& p) {
    nlohmann::json j = {{"M_T", p.M_T}, {"M_R", p.M_R}, {"L", p.L}, {"N", p.N}, {"D", p.D},
                        {"c_IP_H", to_string(p.c_IP_H)}, {"c_IP_QR", to_string(p.c_IP_QR)},
                        {"chi_R", to_string(p.chi_R)}, {"chi_C", to_string(p.chi_C)},
                        {"schedule", to_string(p.schedule)}, {"known_tones", p.known_tones}};
    if (!p.explicit_B.empty()) j["B"] = p.explicit_B;
    return j;
}

TaskCosts task_costs(const CostParams& p) {
    p.validate();
    const int MR = p.M_R, MT = p.M_T;
    const std::int64_t JM = j_k(MR, MT, MT);
    TaskCosts t;
    t.ip_QR = R(JM) * p.c_IP_QR;
    for (int k = 1; k <= MT; ++k) {
        t.ip_H.push_back(R(static_cast<std::int64_t>(MR) * (MT - k + 1)) * p.c_IP_H);
        t.ip_qr.push_back(R(MR + MT - k + 1) * p.c_IP_QR);
        t.qr.push_back(qr_cost(MR, k, QRCostKind::ZF));
        t.map.push_back(k == 1 ? R(JM - MR + MT - 1) : R(JM - j_k(MR, MT, k - 1) + MT - k + 1));
        t.demap.push_back(R(j_k(MR, MT, k) + k - 2));
        t.red.push_back(R(static_cast<std::int64_t>(MR) * (k - 1) * (MT - k + 1)));
    }
    return t;
}

CostReport total_cost(const CostParams& p, Algorithm a) {
    const TaskCosts t = task_costs(p);
    const auto Bv = p.B();
    const int MT = p.M_T, MR = p.M_R;
    auto B = [&](int k) { return R(Bv[static_cast<size_t>(k - 1)]); };
    auto inc = [&](int k) { return B(k) - B(k - 1); };
    auto at = [](const std::vector<Rational>& v, int k) { return v[static_cast<size_t>(k - 1)]; };
    const Rational D(p.D), E(p.known_tones), BM = B(MT);
    const Rational mmse = qr_cost(MR, MT, QRCostKind::MMSE_REG);

    CostReport c;
    c.algorithm = a;
    switch (a) {
        case Algorithm::I:
        case Algorithm::I_MMSE:
            c.interp_H = (D - E) * at(t.ip_H, 1);
            c.qr = D * (a == Algorithm::I ? at(t.qr, MT) : mmse);
            break;
        case Algorithm::II:
        case Algorithm::II_MMSE:
            c.interp_H = (BM - E) * at(t.ip_H, 1);
            c.interp_QR = (D - BM) * t.ip_QR;
            c.qr = BM * (a == Algorithm::II ? at(t.qr, MT) : mmse);
            c.map = BM * at(t.map, 1);
            c.demap = (D - BM) * at(t.demap, MT);
            break;
        case Algorithm::III:
            c.interp_H = (B(1) - E) * at(t.ip_H, 1);
            c.qr = B(1) * at(t.qr, MT);
            c.map = B(1) * at(t.map, 1);
            c.demap = (D - BM) * at(t.demap, MT);
            for (int k = 1; k <= MT; ++k) c.interp_QR += (D - B(k)) * at(t.ip_qr, k);
            for (int k = 2; k <= MT; ++k) {
                c.interp_H += inc(k) * at(t.ip_H, k);
                c.qr += inc(k) * at(t.qr, MT - k + 1);
                c.map += inc(k) * at(t.map, k);
                c.demap += inc(k) * at(t.demap, k - 1);
                c.reduction += inc(k) * at(t.red, k);
            }
            break;
        case Algorithm::III_MMSE: {
            // Algorithm III on the augmented channel: the q-check rows are carried only inside
            // I_MT, over their structurally nonzero entries (k entries for q-check_k)
            auto qcheck_scaled = [&](int from) {  // sum_{j=from}^{M_T-1} j
                Rational s(0);
                for (int j = from; j <= MT - 1; ++j) s += R(j);
                return s;
            };
            c.interp_H = (B(1) - E) * at(t.ip_H, 1);
            c.qr = B(1) * qr_cost(MR, MT, QRCostKind::MMSE_AUG);
            c.map = B(1) * (at(t.map, 1) + qcheck_scaled(2));
            c.demap = (D - BM) * at(t.demap, MT);
            for (int k = 1; k <= MT; ++k) {
                c.interp_QR += (D - B(k)) * at(t.ip_qr, k);
                if (k < MT) c.interp_QR += (BM - B(k)) * R(k) * p.c_IP_QR;
            }
            for (int k = 2; k <= MT; ++k) {
                const std::int64_t kk = k;
                c.interp_H += inc(k) * at(t.ip_H, k);
                c.qr += inc(k) * qr_cost(MR + k - 1, MT - k + 1, QRCostKind::MMSE_AUG);
                c.map += inc(k) * (at(t.map, k) + qcheck_scaled(k));
                c.demap += inc(k) * (at(t.demap, k - 1) + R(kk * (kk - 1) / 2));
                c.reduction += inc(k) * R((MR * (kk - 1) + kk * (kk - 1) / 2) * (MT - kk + 1));
            }
            break;
        }
    }
    return c;
}

BreakEven break_even(const CostParams& p) {
    if (p.schedule != Schedule::exact_minimal || !p.explicit_B.empty())
        fail(ErrorKind::parameter, "break-even closed forms assume B_k = 2kL + 1");
    const TaskCosts t = task_costs(p);
    const int MT = p.M_T, MR = p.M_R;
    const Rational L2(2 * p.L);
    auto at = [](const std::vector<Rational>& v, int k) { return v[static_cast<size_t>(k - 1)]; };
    BreakEven b;
    b.c_IP_max_II = Rational(2) * (at(t.qr, MT) - at(t.demap, MT)) / Rational(MT * (MT + 1));
    for (int k = 2; k <= MT; ++k) {
        b.delta_c_QR += L2 * (at(t.qr, MT) - at(t.qr, MT - k + 1));
        b.c_red_III += L2 * at(t.red, k);
    }
    b.delta_c_map = -L2 * Rational((MR - 1) * (MT - 1));
    const Rational denom = Rational(2, 3) * Rational(static_cast<std::int64_t>(p.L) * MT * (MT * MT - 1));
    b.delta_c_IP = -denom * p.c_IP_QR;
    if (denom != Rational(0)) b.c_IP_max_III = (b.delta_c_QR + b.delta_c_map - b.c_red_III) / denom;
    return b;
}

std::vector<SweepRow> sweep(const std::vector<CostParams>& grid, const std::vector<Algorithm>& algs) {
    std::vector<SweepRow> rows;
    for (const CostParams& p : grid) {
        const Rational base = total_cost(p, Algorithm::I).total();
        for (Algorithm a : algs) {
            SweepRow r{p, total_cost(p, a), Rational(0)};
            if (base != Rational(0)) r.ratio_to_I = r.report.total() / base;
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::vector<CostParams> table2_grid() {
    std::vector<CostParams> g;
    const std::pair<int, std::vector<Rational>> rows[] = {
        {2, {Rational(24, 7), Rational(4), Rational(2), Rational(1), Rational(3, 4), Rational(1, 2)}},
        {4, {Rational(14, 3), Rational(8), Rational(2), Rational(3, 2), Rational(1), Rational(1, 2)}}};
    for (const auto& [MT, costs] : rows)
        for (const Rational& c : costs) {
            CostParams p;
            p.M_T = MT;
            p.M_R = 4;
            p.L = 15;
            p.N = p.D = 512;
            p.c_IP_H = 2;
            p.c_IP_QR = c;
            p.schedule = Schedule::pow2;
            p.known_tones = 16;
            g.push_back(p);
        }
    return g;
}

Rational parse_rational(const std::string& s) {
    auto bad = [&] { fail(ErrorKind::parameter, "cannot parse '" + s + "' as a rational"); };
    try {
        const auto slash = s.find('/');
        if (slash != std::string::npos) {
            size_t a = 0, b = 0;
            const std::int64_t n = std::stoll(s.substr(0, slash), &a);
            const std::int64_t d = std::stoll(s.substr(slash + 1), &b);
            if (a != slash || b != s.size() - slash - 1 || d == 0) bad();
            return Rational(n, d);
        }
        const auto dot = s.find('.');
        if (dot == std::string::npos) {
            size_t a = 0;
            const std::int64_t n = std::stoll(s, &a);
            if (a != s.size()) bad();
            return Rational(n);
        }
        const std::string frac = s.substr(dot + 1);
        if (frac.empty() || frac.size() > 12) bad();
        for (char c : frac)
            if (!std::isdigit(static_cast<unsigned char>(c))) bad();
        std::string whole = s.substr(0, dot);
        const bool neg = !whole.empty() && whole.front() == '-';
        if (neg || (!whole.empty() && whole.front() == '+')) whole = whole.substr(1);
        std::int64_t den = 1;
        for (size_t i = 0; i < frac.size(); ++i) den *= 10;
        size_t a = 0;
        const std::int64_t w = whole.empty() ? 0 : std::stoll(whole, &a);
        if (!whole.empty() && a != whole.size()) bad();
        const Rational r = Rational(w) + Rational(std::stoll(frac), den);
        return neg ? -r : r;
    } catch (const std::logic_error&) {
        bad();
    }
    return Rational(0);
}

std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational round_half_even_value(const Rational& x, int decimals) {
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const Rational y = x * Rational(scale);
    const std::int64_t n = y.numerator(), q = y.denominator();
    std::int64_t fl = n / q;
    if (n % q != 0 && n < 0) --fl;
    const std::int64_t rem = n - fl * q;  // in [0, q)
    if (2 * rem > q || (2 * rem == q && fl % 2 != 0)) ++fl;
    return Rational(fl, scale);
}

std::string round_half_even(const Rational& x, int decimals) {
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const Rational v = round_half_even_value(x, decimals) * Rational(scale);
    std::int64_t n = v.numerator();
    const bool neg = n < 0;
    if (neg) n = -n;
    std::string out = std::to_string(n / scale);
    if (decimals > 0) {
        std::string frac = std::to_string(n % scale);
        frac.insert(0, static_cast<size_t>(decimals) - frac.size(), '0');
        out += "." + frac;
    }
    return neg ? "-" + out : out;
}

}  // namespace polyqr
