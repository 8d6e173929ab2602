#include "polyqr/interp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace polyqr {

namespace {

std::vector<cd> tone_values(const std::vector<int>& tones, int N) {
    std::vector<cd> v;
    v.reserve(tones.size());
    for (int n : tones) v.push_back(tone_point(((n % N) + N) % N, N).value);
    return v;
}

cd omega(long long num, long long den) {
    // e^{-j 2 pi num / den}, exact at quarter turns
    long long m = ((num % den) + den) % den;
    if ((4 * m) % den == 0) {
        static const cd q[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
        return q[(4 * m) / den];
    }
    return std::polar(1.0, -2.0 * kPi * static_cast<double>(m) / static_cast<double>(den));
}

int bit_reverse(int x, int bits) {
    int r = 0;
    for (int i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
    return r;
}

// Radix-2 DIT on bit-reversed input with one (possibly folded) twiddle per butterfly.
void dit_butterflies(std::vector<cd>& u, const cd* tw, std::int64_t* mults) {
    const int B = static_cast<int>(u.size());
    size_t t = 0;
    for (int len = 2; len <= B; len <<= 1) {
        const int half = len / 2;
        for (int start = 0; start < B; start += len)
            for (int j = 0; j < half; ++j) {
                const int i = start + j, l = i + half;
                const cd x = tw[t++] * u[l];
                u[l] = u[i] - x;
                u[i] = u[i] + x;
            }
    }
    if (mults) *mults += static_cast<std::int64_t>(t);
}

}  // namespace

namespace detail {

// Twiddle-shifted pruned FFT for one (B, R, v2) configuration.
struct PrunedFftPlan {
    int B, R, bits, split;
    std::vector<int> rev;
    std::vector<cd> itw;                // inverse B-point FFT twiddles
    std::vector<std::vector<cd>> rtw;   // per target offset r = 1..R-1

    PrunedFftPlan(int B_, int R_, int v2) : B(B_), R(R_), bits(ceil_log2(B_)), split(v2 + 1) {
        rev.resize(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) rev[static_cast<size_t>(i)] = bit_reverse(i, bits);
        for (int len = 2; len <= B; len <<= 1)
            for (int start = 0; start < B; start += len)
                for (int j = 0; j < len / 2; ++j) itw.push_back(omega(-j, len));
        const long long N = static_cast<long long>(B) * R;
        rtw.resize(static_cast<size_t>(R));
        for (int r = 1; r < R; ++r) {
            // pending input scalings omega_N^{v r}; fold the lower branch into the butterfly
            // twiddle and keep the upper one, which traces back to v = 0 (unit scale)
            std::vector<cd> sigma(static_cast<size_t>(B));
            for (int p = 0; p < B; ++p) {
                const int n = rev[static_cast<size_t>(p)];
                const long long v = n < split ? n : n - B;
                sigma[static_cast<size_t>(p)] = omega(v * r, N);
            }
            auto& tw = rtw[static_cast<size_t>(r)];
            for (int len = 2; len <= B; len <<= 1)
                for (int start = 0; start < B; start += len)
                    for (int j = 0; j < len / 2; ++j) {
                        const int i = start + j, l = i + len / 2;
                        tw.push_back(omega(j, len) * sigma[static_cast<size_t>(l)] /
                                     sigma[static_cast<size_t>(i)]);
                        sigma[static_cast<size_t>(l)] = sigma[static_cast<size_t>(i)];
                    }
        }
    }

    CVec run(const CVec& a_B, std::int64_t* mults) const {
        std::vector<cd> u(static_cast<size_t>(B));
        for (int p = 0; p < B; ++p) u[static_cast<size_t>(p)] = a_B(rev[static_cast<size_t>(p)]);
        dit_butterflies(u, itw.data(), mults);
        // 1/B is a power-of-two shift; not a multiplication
        for (auto& x : u) x /= static_cast<double>(B);
        std::vector<cd> coeff_rev(static_cast<size_t>(B));
        for (int p = 0; p < B; ++p) coeff_rev[static_cast<size_t>(p)] = u[static_cast<size_t>(rev[static_cast<size_t>(p)])];
        CVec out((R - 1) * B);
        std::vector<cd> w;
        for (int r = 1; r < R; ++r) {
            w = coeff_rev;
            dit_butterflies(w, rtw[static_cast<size_t>(r)].data(), mults);
            for (int k = 0; k < B; ++k) out((R - 1) * k + r - 1) = w[static_cast<size_t>(k)];
        }
        return out;
    }
};

}  // namespace detail

namespace {

void check_fft_regime(const EquidistantGrid& g, int v1, int v2) {
    if (!is_pow2(g.B) || !is_pow2(g.R))
        fail(ErrorKind::unsupported_regime, "fft engine needs power-of-two B and R");
    if (v1 < 0 || v2 < 0) fail(ErrorKind::parameter, "negative degree");
    if (g.B != (1 << ceil_log2(v1 + v2 + 1)))
        fail(ErrorKind::unsupported_regime, "fft engine needs B = 2^ceil(log2(V+1))");
    const bool symmetric_regime = v1 <= g.B / 2 && v2 <= g.B / 2 - 1;
    if (!symmetric_regime && v1 != 0)
        fail(ErrorKind::unsupported_regime, "degrees outside the pruned-FFT regimes");
}

}  // namespace

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

int ceil_log2(int x) {
    int b = 0;
    while ((1 << b) < x) ++b;
    return b;
}

std::pair<CMat, CMat> point_matrices(const std::vector<cd>& base, const std::vector<cd>& target,
                                     int v1, int v2) {
    return {point_matrix(base, v1, v2), point_matrix(target, v1, v2)};
}

CMat interpolation_matrix(const std::vector<cd>& base, const std::vector<cd>& target, int v1,
                          int v2) {
    if (base.size() < static_cast<size_t>(v1 + v2 + 1))
        fail(ErrorKind::parameter, "fewer base points than coefficients");
    auto [Bm, Tm] = point_matrices(base, target, v1, v2);
    Eigen::Index rank = 0;
    const CMat Bp = pseudo_inverse(Bm, 1e-12, nullptr, &rank);
    if (rank < v1 + v2 + 1) fail(ErrorKind::conditioning, "base-point matrix is rank deficient");
    return Tm * Bp;
}

std::vector<int> EquidistantGrid::base_tones() const {
    std::vector<int> t;
    for (int k = 0; k < B; ++k) t.push_back((offset + R * k) % N());
    return t;
}

std::vector<int> EquidistantGrid::target_tones() const {
    std::vector<int> t;
    for (int k = 0; k < B; ++k)
        for (int r = 1; r < R; ++r) t.push_back((offset + R * k + r) % N());
    return t;
}

int EquidistantGrid::target_position(int tone) const {
    const int rel = ((tone - offset) % N() + N()) % N();
    const int k = rel / R, r = rel % R;
    return r == 0 ? -1 : (R - 1) * k + r - 1;
}

CVec upsample_fft(const CVec& base_samples, const EquidistantGrid& grid, int v1, int v2,
                  std::int64_t* mults) {
    check_fft_regime(grid, v1, v2);
    if (base_samples.size() != grid.B) fail(ErrorKind::parameter, "expected B base samples");
    detail::PrunedFftPlan plan(grid.B, grid.R, v2);
    return plan.run(base_samples, mults);
}

const char* to_string(Engine e) {
    switch (e) {
    case Engine::direct: return "direct";
    case Engine::fft: return "fft";
    case Engine::fir: return "fir";
    }
    return "?";
}

Engine engine_from_string(const std::string& s) {
    if (s == "direct") return Engine::direct;
    if (s == "fft") return Engine::fft;
    if (s == "fir") return Engine::fir;
    fail(ErrorKind::schema, "unknown engine '" + s + "'");
}

Rational fft_cost_per_target(int B, int R) {
    // (B/2)log2 B for the inverse DFT plus (R-1)(B/2)log2 B for the pruned stages
    const std::int64_t lb = ceil_log2(B);
    return Rational(static_cast<std::int64_t>(R) * (B / 2) * lb, static_cast<std::int64_t>(R - 1) * B);
}

Rational fir_cost_per_target(int B_prime, bool real_coefficients, const Rational& chi_R,
                             const Rational& chi_C) {
    return (real_coefficients ? chi_R : chi_C) * Rational(B_prime, 2);
}

InterpolationDesign fir_design(const EquidistantGrid& grid, int v1, int v2, int B_prime,
                               const Rational& chi_R, const Rational& chi_C) {
    const int B = grid.B, R = grid.R;
    if (B_prime % 2 != 0) fail(ErrorKind::parameter, "B' must be even");
    if (B_prime < 2 || B_prime > B) fail(ErrorKind::parameter, "B' must lie in [2, B]");
    if (R < 2) fail(ErrorKind::parameter, "upsampling ratio must be at least 2");
    const int N = grid.N();
    // B'/2 closest base points on either side of the gap between b_{B-1} and b_0
    std::vector<int> cols;
    for (int c = 0; c < B_prime / 2; ++c) cols.push_back(c);
    for (int c = B - B_prime / 2; c < B; ++c) cols.push_back(c);
    std::vector<cd> bpts, tpts;
    for (int c : cols) bpts.push_back(tone_point(R * c, N).value);
    for (int r = 1; r < R; ++r) tpts.push_back(tone_point(R * (B - 1) + r, N).value);
    auto [B0, T0] = point_matrices(bpts, tpts, v1, v2);
    const CMat W = T0 * pseudo_inverse(B0, 1e-12);

    InterpolationDesign d;
    d.B = B;
    d.R = R;
    d.v1 = v1;
    d.v2 = v2;
    d.engine = Engine::fir;
    d.B_prime = B_prime;
    d.F0 = CMat::Zero(R - 1, B);
    for (size_t i = 0; i < cols.size(); ++i) d.F0.col(cols[i]) = W.col(static_cast<Eigen::Index>(i));
    if (v1 == v2) d.F0 = d.F0.real().cast<cd>();  // real by construction; drop rounding residue
    d.mult_count_per_target = fir_cost_per_target(B_prime, v1 == v2, chi_R, chi_C);
    return d;
}

CVec fir_apply(const InterpolationDesign& d, const CVec& base_samples) {
    const int B = d.B, R = d.R;
    if (base_samples.size() != B) fail(ErrorKind::parameter, "expected B base samples");
    CVec out((R - 1) * B);
    for (int k = 0; k < B; ++k)
        for (int r = 1; r < R; ++r) {
            cd acc = 0;
            for (int c = 0; c < B; ++c) acc += d.F0(r - 1, c) * base_samples((c + k + 1) % B);
            out((R - 1) * k + r - 1) = acc;
        }
    return out;
}

nlohmann::json to_json(const InterpolationDesign& d) {
    return {{"B", d.B},
            {"R", d.R},
            {"v1", d.v1},
            {"v2", d.v2},
            {"engine", to_string(d.engine)},
            {"B_prime", d.B_prime},
            {"F0", matrix_to_json(d.F0)}};
}

Interpolator::Interpolator(std::vector<int> base_tones, std::vector<int> target_tones, int N,
                           Degree deg, const EngineSpec& spec)
    : base_(std::move(base_tones)), targets_(std::move(target_tones)), N_(N), deg_(deg),
      spec_(spec) {
    const int B = static_cast<int>(base_.size());
    if (B < deg.total() + 1 && !(spec.kind == Engine::fir && spec.B_prime && spec.B_prime < B))
        fail(ErrorKind::infeasible, "base set smaller than V+1 for exact interpolation");
    if (spec.kind == Engine::direct) {
        W_ = interpolation_matrix(tone_values(base_, N), tone_values(targets_, N), deg.v1, deg.v2);
        cost_ = Rational(B);
        return;
    }
    // fft / fir: base must be an equidistant grid spanning N, sorted by tone
    if (B == 0 || N % B != 0)
        fail(ErrorKind::unsupported_regime, "equidistant engines need |base| dividing N");
    EquidistantGrid g{B, N / B, base_.front()};
    if (g.offset >= g.R) fail(ErrorKind::unsupported_regime, "base grid offset must be below N/B");
    if (base_ != g.base_tones())
        fail(ErrorKind::unsupported_regime, "base tones are not an equidistant grid");
    for (int t : targets_) {
        const int p = g.target_position(t);
        if (p < 0) fail(ErrorKind::parameter, "target tone coincides with a base tone");
        pos_.push_back(p);
    }
    grid_ = g;
    if (spec.kind == Engine::fft) {
        check_fft_regime(g, deg.v1, deg.v2);
        cost_ = fft_cost_per_target(g.B, g.R);
        plan_ = std::make_shared<const detail::PrunedFftPlan>(g.B, g.R, deg.v2);
    } else {
        int v1 = deg.v1, v2 = deg.v2;
        if (spec.v1_override) {
            v1 = *spec.v1_override;
            v2 = spec.v2_mode == V2Mode::symmetric ? v1 : deg.total() - v1;
        }
        design_ = fir_design(g, v1, v2, spec.B_prime ? spec.B_prime : B, spec.chi_R, spec.chi_C);
        cost_ = design_->mult_count_per_target;
        for (int c = 0; c < B; ++c)
            if (design_->F0.col(c).squaredNorm() > 0) support_.push_back(c);
    }
}

CMat Interpolator::apply(const CMat& base_samples, std::int64_t* engine_mults) const {
    if (base_samples.rows() != static_cast<Eigen::Index>(base_.size()))
        fail(ErrorKind::parameter, "base sample rows must match the base tone count");
    const auto E = base_samples.cols();
    const auto T = static_cast<Eigen::Index>(targets_.size());
    if (spec_.kind == Engine::direct) return W_ * base_samples;
    CMat out(T, E);
    if (spec_.kind == Engine::fft) {
        for (Eigen::Index e = 0; e < E; ++e) {
            const CVec all = plan_->run(base_samples.col(e), engine_mults);
            for (Eigen::Index t = 0; t < T; ++t) out(t, e) = all(pos_[static_cast<size_t>(t)]);
        }
        return out;
    }
    // fir: evaluate only the requested targets, over the B' support
    const auto& d = *design_;
    const int B = d.B, R = d.R;
    for (Eigen::Index t = 0; t < T; ++t) {
        const int p = pos_[static_cast<size_t>(t)];
        const int k = p / (R - 1), r = p % (R - 1) + 1;
        for (Eigen::Index e = 0; e < E; ++e) {
            cd acc = 0;
            for (int c : support_) acc += d.F0(r - 1, c) * base_samples((c + k + 1) % B, e);
            out(t, e) = acc;
        }
    }
    return out;
}

}  // namespace polyqr
