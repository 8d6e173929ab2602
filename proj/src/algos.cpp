#include "polyqr/algos.hpp"

#include <algorithm>
#include <cmath>

namespace polyqr {

namespace {

int index_of(const std::vector<int>& v, int x) {
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    return it != v.end() && *it == x ? static_cast<int>(it - v.begin()) : -1;
}

std::vector<int> set_minus(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::int64_t nonzeros(const CMat& m) {
    std::int64_t n = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) n += m(i, j) != cd(0);
    return n;
}

// Channel samples on demand: copied at tones of E, interpolated from E elsewhere.
class ChannelSource {
public:
    ChannelSource(const ToneSets& t, const std::vector<CMat>& H_E, int L, const EngineSpec& spec,
                  OpCounts& counts)
        : t_(t), H_E_(H_E), L_(L), spec_(spec), counts_(counts) {}

    std::vector<CMat> get(const std::vector<int>& tones, int c0, int m) {
        std::vector<CMat> out(tones.size());
        std::vector<int> need;
        std::vector<size_t> slot;
        for (size_t i = 0; i < tones.size(); ++i) {
            const int p = index_of(t_.E, tones[i]);
            if (p >= 0) {
                out[i] = H_E_[p].middleCols(c0, m);
            } else {
                need.push_back(tones[i]);
                slot.push_back(i);
            }
        }
        if (need.empty()) return out;
        if (static_cast<int>(t_.E.size()) < L_ + 1)
            fail(ErrorKind::missing_data, "too few known channel samples for the channel degree");
        const Eigen::Index MR = H_E_.front().rows(), w = MR * m;
        CMat base(static_cast<Eigen::Index>(t_.E.size()), w);
        for (size_t e = 0; e < t_.E.size(); ++e) {
            const CMat blk = H_E_[e].middleCols(c0, m);
            base.row(static_cast<Eigen::Index>(e)) = Eigen::Map<const CVec>(blk.data(), w).transpose();
        }
        const Interpolator ip(t_.E, need, t_.N, {0, L_}, spec_);
        const CMat vals = ip.apply(base);
        counts_.ip_H_evals += static_cast<std::int64_t>(need.size()) * w;
        ++counts_.ip_calls;
        for (size_t i = 0; i < need.size(); ++i) {
            const CVec row = vals.row(static_cast<Eigen::Index>(i)).transpose();
            out[slot[i]] = Eigen::Map<const CMat>(row.data(), MR, m);
        }
        return out;
    }

    CMat at(int tone) { return get({tone}, 0, t_.M_T())[0]; }

private:
    const ToneSets& t_;
    const std::vector<CMat>& H_E_;
    int L_;
    EngineSpec spec_;
    OpCounts& counts_;
};

// Interpolates one row of entries per base tone to the target tones.
CMat interpolate_rows(const std::vector<int>& base, const std::vector<int>& targets, int N,
                      Degree deg, const EngineSpec& spec, const CMat& values, OpCounts& counts) {
    if (targets.empty()) return CMat(0, values.cols());
    const Interpolator ip(base, targets, N, deg, spec);
    counts.ip_QR_evals += static_cast<std::int64_t>(targets.size()) * values.cols();
    ++counts.ip_calls;
    return ip.apply(values);
}

void validate(const std::vector<CMat>& H_E, const ToneSets& t, const AlgoConfig& cfg) {
    if (cfg.per_tone_sorting)
        fail(ErrorKind::unsupported_regime,
             "tone-dependent column ordering breaks the polynomial structure of the factors");
    if (t.I.empty()) fail(ErrorKind::parameter, "tone sets have no base sets");
    if (H_E.size() != t.E.size()) fail(ErrorKind::parameter, "one channel sample per known tone");
    if (H_E.empty()) fail(ErrorKind::missing_data, "no channel samples");
    if (H_E.front().cols() != t.M_T())
        fail(ErrorKind::parameter, "channel column count differs from the number of base sets");
    if (H_E.front().rows() < H_E.front().cols()) fail(ErrorKind::parameter, "need M_R >= M_T");
    for (const CMat& h : H_E)
        if (h.rows() != H_E.front().rows() || h.cols() != H_E.front().cols())
            fail(ErrorKind::parameter, "channel samples differ in shape");
    auto sorted_unique = [](const std::vector<int>& v) {
        return std::adjacent_find(v.begin(), v.end(), std::greater_equal<int>()) == v.end();
    };
    if (!sorted_unique(t.D) || !sorted_unique(t.E)) fail(ErrorKind::parameter, "tone sets must be sorted");
    for (size_t k = 0; k < t.I.size(); ++k) {
        if (!sorted_unique(t.I[k])) fail(ErrorKind::parameter, "tone sets must be sorted");
        if (k > 0 && !std::includes(t.I[k].begin(), t.I[k].end(), t.I[k - 1].begin(), t.I[k - 1].end()))
            fail(ErrorKind::parameter, "base sets must be nested");
    }
    if (!std::includes(t.D.begin(), t.D.end(), t.I.back().begin(), t.I.back().end()))
        fail(ErrorKind::parameter, "base tones must be data tones");
    if (cfg.sigma_w < 0) fail(ErrorKind::parameter, "noise standard deviation must be nonnegative");
}

QRFactors direct_qr(const CMat& H, bool mmse, double sigma_w, std::int64_t* mults) {
    return mmse ? mmse_qr(H, sigma_w, static_cast<int>(H.cols()), mults) : givens_qr(H, mults);
}

// Upper-triangle entries of rows k0.. in row-major order.
Eigen::Index tri_entries(Eigen::Index M) { return M * (M + 1) / 2; }

struct Packed {
    CMat Qt;
    CMat Rt;
};

CVec pack(const CMat& Qt, const CMat& Rt) {
    const Eigen::Index P = Qt.rows(), M = Qt.cols();
    CVec v(P * M + tri_entries(M));
    Eigen::Index i = 0;
    for (Eigen::Index j = 0; j < M; ++j)
        for (Eigen::Index r = 0; r < P; ++r) v(i++) = Qt(r, j);
    for (Eigen::Index r = 0; r < M; ++r)
        for (Eigen::Index c = r; c < M; ++c) v(i++) = Rt(r, c);
    return v;
}

Packed unpack(const CVec& v, Eigen::Index P, Eigen::Index M) {
    Packed p{CMat(P, M), CMat::Zero(M, M)};
    Eigen::Index i = 0;
    for (Eigen::Index j = 0; j < M; ++j)
        for (Eigen::Index r = 0; r < P; ++r) p.Qt(r, j) = v(i++);
    for (Eigen::Index r = 0; r < M; ++r)
        for (Eigen::Index c = r; c < M; ++c) p.Rt(r, c) = v(i++);
    return p;
}

MappedFactors leading_mapped(const CMat& Qt, const CMat& Rt) {
    MappedFactors mf;
    mf.Qtilde = Qt;
    mf.Rtilde = Rt;
    for (Eigen::Index j = 0; j < Rt.rows(); ++j) mf.delta.push_back(Rt(j, j).real());
    mf.leading = true;
    return mf;
}

// Inverse mapping at a tone outside the base set, with the rank-deficient fallback.
QRFactors demap_tone(const MappedFactors& mf, int tone, bool mmse, double sigma_w,
                     ChannelSource& src, const AlgoConfig& cfg, PerToneFactors& out) {
    if (!mmse) {
        bool used = false;
        QRFactors f = map_inverse(
            mf, [&] { used = true; return src.at(tone); }, &out.counts.demap, cfg.inverse);
        if (used) out.fallback_tones.push_back(tone);
        return f;
    }
    try {
        QRFactors f = map_inverse(mf, {}, &out.counts.demap, cfg.inverse);
        f.kind = QRKind::REGULARIZED;
        f.alpha = std::sqrt(static_cast<double>(mf.Rtilde.cols())) * sigma_w;
        return f;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::missing_data) throw;
        out.fallback_tones.push_back(tone);
        return direct_qr(src.at(tone), true, sigma_w, &out.counts.qr);
    }
}

PerToneFactors make_output(const ToneSets& t) {
    PerToneFactors out;
    out.tones = t.D;
    out.factors.resize(t.D.size());
    return out;
}

PerToneFactors run_I(const std::vector<CMat>& H_E, const ToneSets& t, int L, const AlgoConfig& cfg,
                     bool mmse) {
    PerToneFactors out = make_output(t);
    ChannelSource src(t, H_E, L, cfg.engine_H, out.counts);
    const auto H = src.get(t.D, 0, t.M_T());
    for (size_t i = 0; i < t.D.size(); ++i) out.factors[i] = direct_qr(H[i], mmse, cfg.sigma_w, &out.counts.qr);
    return out;
}

PerToneFactors run_II(const std::vector<CMat>& H_E, const ToneSets& t, int L, const AlgoConfig& cfg,
                      bool mmse) {
    PerToneFactors out = make_output(t);
    ChannelSource src(t, H_E, L, cfg.engine_H, out.counts);
    const int MT = t.M_T();
    const Eigen::Index MR = H_E.front().rows();
    const std::vector<int>& base = t.I.back();
    const std::vector<int> rest = set_minus(t.D, base);

    const auto H = src.get(base, 0, MT);
    CMat values(static_cast<Eigen::Index>(base.size()), MR * MT + tri_entries(MT));
    for (size_t i = 0; i < base.size(); ++i) {
        QRFactors f = direct_qr(H[i], mmse, cfg.sigma_w, &out.counts.qr);
        const CVec a1 = H[i].col(0);
        const MappedFactors mf = map_forward(f.Q, f.R, std::nullopt, &a1, &out.counts.map);
        values.row(static_cast<Eigen::Index>(i)) = pack(mf.Qtilde, mf.Rtilde).transpose();
        out.factors[index_of(t.D, base[i])] = std::move(f);  // base tones keep the direct factors
    }
    const CMat vals =
        interpolate_rows(base, rest, t.N, {MT * L, MT * L}, cfg.engine_QR, values, out.counts);
    for (size_t i = 0; i < rest.size(); ++i) {
        const Packed p = unpack(vals.row(static_cast<Eigen::Index>(i)).transpose(), MR, MT);
        out.factors[index_of(t.D, rest[i])] =
            demap_tone(leading_mapped(p.Qt, p.Rt), rest[i], mmse, cfg.sigma_w, src, cfg, out);
    }
    return out;
}

PerToneFactors run_III(const std::vector<CMat>& H_E, const ToneSets& t, int L,
                       const AlgoConfig& cfg, bool mmse) {
    const bool aug = mmse && cfg.sigma_w > 0;
    PerToneFactors out = make_output(t);
    ChannelSource src(t, H_E, L, cfg.engine_H, out.counts);
    const int MT = t.M_T();
    const Eigen::Index MR = H_E.front().rows(), P = aug ? MR + MT : MR;
    const double alpha = aug ? std::sqrt(static_cast<double>(MT)) * cfg.sigma_w : 0.0;
    const std::vector<int>& top = t.I.back();

    // mapped factors (complete or interpolated) and assembled factors, indexed like D
    std::vector<CMat> Qt(t.D.size(), CMat::Zero(P, MT)), Rt(t.D.size(), CMat::Zero(MT, MT));
    std::vector<CMat> Qo(t.D.size()), Ro(t.D.size());

    for (int k = 1; k <= MT; ++k) {
        const int m = MT - k + 1;
        const std::vector<int>& Ik = t.I[k - 1];
        const std::vector<int> fresh = k == 1 ? Ik : set_minus(Ik, t.I[k - 2]);
        const auto Hk = src.get(fresh, k - 1, m);
        for (size_t i = 0; i < fresh.size(); ++i) {
            const int d = index_of(t.D, fresh[i]);
            Qo[d] = CMat::Zero(P, MT);
            Ro[d] = CMat::Zero(MT, MT);
            // the augmented rows M_R, .., M_R + k - 2 of columns k.. are zero; alpha*I follows
            const Eigen::Index rows = aug ? MR + k - 1 : MR;
            CMat A = CMat::Zero(rows, m);
            A.topRows(MR) = Hk[i];
            if (k > 1) {
                CMat Qp, Rp;
                try {
                    const MappedFactors pre =
                        leading_mapped(Qt[d].leftCols(k - 1), Rt[d].topRows(k - 1));
                    const QRFactors f = map_inverse(pre, {}, &out.counts.demap, cfg.inverse);
                    Qp = f.Q;
                    Rp = f.R;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::missing_data) throw;
                    out.fallback_tones.push_back(fresh[i]);
                    const CMat Hf = src.at(fresh[i]);
                    const QRFactors f = aug ? augmented_qr(Hf, alpha, &out.counts.qr)
                                            : givens_qr(Hf, &out.counts.qr);
                    Qp = f.Q.leftCols(k - 1);
                    Rp = f.R.topRows(k - 1);
                }
                Qo[d].leftCols(k - 1) = Qp;
                Ro[d].topRows(k - 1) = Rp;
                const CMat Qs = Qp.topRows(rows);
                A -= Qs * Rp.rightCols(m);
                out.counts.reduction += nonzeros(Qs) * m;
            }
            const QRFactors f = aug ? augmented_qr(A, alpha, &out.counts.qr)
                                    : givens_qr(A, &out.counts.qr);
            Qo[d].rightCols(m) = f.Q;
            Ro[d].bottomRightCorner(m, m) = f.R;

            CMat Qm = f.Q;
            if (aug) Qm.col(m - 1).tail(MT).setZero();  // q-check of the last column is never needed
            CVec a1;
            if (k == 1) {
                a1 = CVec::Zero(P);
                a1.head(MR) = Hk[i].col(0);
                if (aug) a1(MR) = alpha;
            }
            const MappedFactors mf = map_forward(
                Qm, f.R, k == 1 ? std::nullopt : std::optional<double>(Rt[d](k - 2, k - 2).real()),
                k == 1 ? &a1 : nullptr, &out.counts.map);
            Qt[d].rightCols(m) = mf.Qtilde;
            Rt[d].bottomRightCorner(m, m) = mf.Rtilde;
        }

        // q~_k and r~_k^T from I_k to D \ I_k
        const std::vector<int> others = set_minus(t.D, Ik);
        CMat values(static_cast<Eigen::Index>(Ik.size()), MR + m);
        for (size_t i = 0; i < Ik.size(); ++i) {
            const int d = index_of(t.D, Ik[i]);
            values.row(static_cast<Eigen::Index>(i)) << Qt[d].col(k - 1).head(MR).transpose(),
                Rt[d].row(k - 1).tail(m);
        }
        const CMat vals = interpolate_rows(Ik, others, t.N, {k * L, k * L}, cfg.engine_QR, values, out.counts);
        for (size_t i = 0; i < others.size(); ++i) {
            const int d = index_of(t.D, others[i]);
            const auto row = vals.row(static_cast<Eigen::Index>(i));
            Qt[d].col(k - 1).head(MR) = row.head(MR).transpose();
            Rt[d].row(k - 1).tail(m) = row.tail(m);
        }

        // q-check_k (its k structurally nonzero entries) from I_k to I_MT \ I_k
        if (aug && k < MT) {
            const std::vector<int> within = set_minus(top, Ik);
            CMat qv(static_cast<Eigen::Index>(Ik.size()), k);
            for (size_t i = 0; i < Ik.size(); ++i)
                qv.row(static_cast<Eigen::Index>(i)) =
                    Qt[index_of(t.D, Ik[i])].col(k - 1).segment(MR, k).transpose();
            const CMat qi = interpolate_rows(Ik, within, t.N, {k * L, k * L}, cfg.engine_QR, qv, out.counts);
            for (size_t i = 0; i < within.size(); ++i) {
                if (index_of(top, within[i]) < 0) ++out.counts.qcheck_evals;
                Qt[index_of(t.D, within[i])].col(k - 1).segment(MR, k) =
                    qi.row(static_cast<Eigen::Index>(i)).transpose();
            }
        }
    }

    for (size_t i = 0; i < top.size(); ++i) {
        const int d = index_of(t.D, top[i]);
        QRFactors f;
        f.Q = Qo[d].topRows(MR);
        f.R = Ro[d];
        f.kind = aug ? QRKind::REGULARIZED : QRKind::UT;
        if (mmse) f.alpha = alpha;
        out.factors[d] = std::move(f);
    }
    for (int n : set_minus(t.D, top)) {
        const int d = index_of(t.D, n);
        out.factors[d] = demap_tone(leading_mapped(Qt[d].topRows(MR), Rt[d]), n, mmse,
                                    cfg.sigma_w, src, cfg, out);
    }
    return out;
}

}  // namespace

const char* to_string(Schedule s) { return s == Schedule::pow2 ? "pow2" : "exact_minimal"; }

Schedule schedule_from_string(const std::string& s) {
    if (s == "pow2") return Schedule::pow2;
    if (s == "exact_minimal" || s == "exact") return Schedule::exact_minimal;
    fail(ErrorKind::parameter, "unknown schedule '" + s + "'");
}

std::vector<int> base_sizes(int L, int M_T, Schedule mode) {
    if (L < 0 || M_T < 1) fail(ErrorKind::parameter, "need L >= 0 and M_T >= 1");
    std::vector<int> B;
    for (int k = 1; k <= M_T; ++k) {
        const int b = 2 * k * L + 1;
        B.push_back(mode == Schedule::pow2 ? 1 << ceil_log2(b) : b);
    }
    return B;
}

ToneSets build_tone_sets(int N, std::vector<int> D, std::vector<int> E, int L, int M_T,
                         Schedule mode, int offset) {
    std::sort(D.begin(), D.end());
    D.erase(std::unique(D.begin(), D.end()), D.end());
    std::sort(E.begin(), E.end());
    E.erase(std::unique(E.begin(), E.end()), E.end());
    for (const auto* s : {&D, &E})
        if (!s->empty() && (s->front() < 0 || s->back() >= N))
            fail(ErrorKind::domain, "tone index outside the grid");
    const std::vector<int> B = base_sizes(L, M_T, mode);
    const int BM = B.back();
    if (static_cast<int>(D.size()) < BM)
        fail(ErrorKind::infeasible, "too few data tones for the base set size " + std::to_string(BM));
    ToneSets t{N, D, E, std::vector<std::vector<int>>(M_T)};
    std::vector<int>& top = t.I.back();
    if (mode == Schedule::pow2) {
        if (N % BM != 0) fail(ErrorKind::infeasible, "grid size is not a multiple of the base set size");
        const int stride = N / BM;
        if (offset < 0 || offset >= stride) fail(ErrorKind::parameter, "offset must be below the stride");
        for (int i = 0; i < BM; ++i) top.push_back(offset + i * stride);
        if (!std::includes(D.begin(), D.end(), top.begin(), top.end()))
            fail(ErrorKind::infeasible, "equidistant base tones are not all data tones");
        for (int k = M_T - 1; k >= 1; --k) {
            const int step = BM / B[k - 1];
            for (int i = 0; i < B[k - 1]; ++i) t.I[k - 1].push_back(top[i * step]);
        }
    } else {
        const std::int64_t Dn = static_cast<std::int64_t>(D.size());
        for (int i = 0; i < BM; ++i) top.push_back(D[static_cast<size_t>(i * Dn / BM)]);
        for (int k = M_T - 1; k >= 1; --k) {
            const std::vector<int>& up = t.I[k];
            const std::int64_t U = static_cast<std::int64_t>(up.size());
            for (int i = 0; i < B[k - 1]; ++i) t.I[k - 1].push_back(up[static_cast<size_t>(i * U / B[k - 1])]);
        }
    }
    return t;
}

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::I: return "I";
        case Algorithm::II: return "II";
        case Algorithm::III: return "III";
        case Algorithm::I_MMSE: return "I-MMSE";
        case Algorithm::II_MMSE: return "II-MMSE";
        case Algorithm::III_MMSE: return "III-MMSE";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    for (Algorithm a : {Algorithm::I, Algorithm::II, Algorithm::III, Algorithm::I_MMSE,
                        Algorithm::II_MMSE, Algorithm::III_MMSE}) {
        std::string n = to_string(a), alt = n;
        std::replace(alt.begin(), alt.end(), '-', '_');
        if (s == n || s == alt) return a;
    }
    fail(ErrorKind::parameter, "unknown algorithm '" + s + "'");
}

bool is_mmse(Algorithm a) {
    return a == Algorithm::I_MMSE || a == Algorithm::II_MMSE || a == Algorithm::III_MMSE;
}

const QRFactors& PerToneFactors::at(int tone) const {
    const int i = index_of(tones, tone);
    if (i < 0) fail(ErrorKind::parameter, "tone " + std::to_string(tone) + " is not a data tone");
    return factors[static_cast<size_t>(i)];
}

PerToneFactors run_algorithm(Algorithm a, const std::vector<CMat>& H_E, const ToneSets& tones,
                             int L, const AlgoConfig& cfg) {
    validate(H_E, tones, cfg);
    const bool mmse = is_mmse(a);
    switch (a) {
        case Algorithm::I:
        case Algorithm::I_MMSE: return run_I(H_E, tones, L, cfg, mmse);
        case Algorithm::II:
        case Algorithm::II_MMSE: return run_II(H_E, tones, L, cfg, mmse);
        case Algorithm::III:
        case Algorithm::III_MMSE: return run_III(H_E, tones, L, cfg, mmse);
    }
    fail(ErrorKind::parameter, "unknown algorithm");
}

PerToneFactors algorithm_I(const std::vector<CMat>& H_E, const ToneSets& t, int L, const AlgoConfig& cfg) {
    return run_algorithm(Algorithm::I, H_E, t, L, cfg);
}
PerToneFactors algorithm_II(const std::vector<CMat>& H_E, const ToneSets& t, int L, const AlgoConfig& cfg) {
    return run_algorithm(Algorithm::II, H_E, t, L, cfg);
}
PerToneFactors algorithm_III(const std::vector<CMat>& H_E, const ToneSets& t, int L, const AlgoConfig& cfg) {
    return run_algorithm(Algorithm::III, H_E, t, L, cfg);
}

}  // namespace polyqr
