#include <cmath>
#include <limits>

#include "polyqr/interp.hpp"
#include "polyqr/lpmap.hpp"
#include "polyqr/qr.hpp"

namespace polyqr {

namespace {

// Full (R-1)B x B interpolation matrix of a FIR design, columns in base-tone order.
CMat fir_matrix(const InterpolationDesign& d) {
    CMat W(static_cast<Eigen::Index>(d.R - 1) * d.B, d.B);
    for (int c = 0; c < d.B; ++c) W.col(c) = fir_apply(d, CVec::Unit(d.B, c));
    return W;
}

}  // namespace

V1Search inexact_optimize_v1(const EquidistantGrid& grid, int B_prime, int M_T, int L,
                             const ChannelSampler& sampler, int trials, std::uint64_t seed,
                             V2Mode mode) {
    if (trials < 1) fail(ErrorKind::parameter, "need at least one channel trial");
    if (M_T < 1 || L < 1) fail(ErrorKind::parameter, "need M_T >= 1 and L >= 1");
    const int V1max = M_T * L, N = grid.N();
    if (mode == V2Mode::symmetric && 2 * V1max + 1 > grid.B)
        fail(ErrorKind::parameter, "base grid too small for the mapped-factor degree");

    std::vector<CMat> W;
    for (int v1 = 1; v1 <= V1max; ++v1) {
        const int v2 = mode == V2Mode::symmetric ? v1 : 2 * V1max - v1;
        W.push_back(fir_matrix(fir_design(grid, v1, v2, B_prime)));
    }
    const auto base = grid.base_tones(), targets = grid.target_tones();
    std::vector<double> err(static_cast<size_t>(V1max), 0.0);
    std::mt19937_64 rng(seed);

    for (int t = 0; t < trials; ++t) {
        const LaurentPolyMatrix H = sampler(rng);
        const Eigen::Index MR = H.rows(), MT = H.cols();
        if (MT != M_T) fail(ErrorKind::parameter, "sampler returned a channel with the wrong column count");
        const Eigen::Index ent = MR * MT + MT * (MT + 1) / 2;
        // mapped factors at the base tones, shared by every candidate
        CMat X(static_cast<Eigen::Index>(base.size()), ent);
        for (size_t i = 0; i < base.size(); ++i) {
            const CMat Hn = H.eval(tone_point(base[i], N));
            const QRFactors f = givens_qr(Hn);
            const CVec a1 = Hn.col(0);
            const MappedFactors mf = map_forward(f.Q, f.R, std::nullopt, &a1);
            Eigen::Index c = 0;
            for (Eigen::Index j = 0; j < MT; ++j)
                for (Eigen::Index r = 0; r < MR; ++r) X(static_cast<Eigen::Index>(i), c++) = mf.Qtilde(r, j);
            for (Eigen::Index r = 0; r < MT; ++r)
                for (Eigen::Index j = r; j < MT; ++j) X(static_cast<Eigen::Index>(i), c++) = mf.Rtilde(r, j);
        }
        std::vector<CMat> Ht;
        for (int n : targets) Ht.push_back(H.eval(tone_point(n, N)));

        for (int v = 0; v < V1max; ++v) {
            const CMat Y = W[static_cast<size_t>(v)] * X;
            double e = 0;
            for (size_t i = 0; i < targets.size(); ++i) {
                const auto row = Y.row(static_cast<Eigen::Index>(i));
                CMat Q(MR, MT), R = CMat::Zero(MT, MT);
                Eigen::Index c = 0;
                for (Eigen::Index j = 0; j < MT; ++j)
                    for (Eigen::Index r = 0; r < MR; ++r) Q(r, j) = row(c++);
                for (Eigen::Index r = 0; r < MT; ++r)
                    for (Eigen::Index j = r; j < MT; ++j) R(r, j) = row(c++);
                // inverse mapping with magnitudes: inexact Delta products may turn negative
                double prev = 1.0;
                for (Eigen::Index k = 0; k < MT; ++k) {
                    const double d = R(k, k).real();
                    const double s = 1.0 / std::sqrt(std::abs(prev * d));
                    Q.col(k) *= s;
                    R.row(k) *= s;
                    prev = d;
                }
                e += (Q.adjoint() * Ht[i] - R).squaredNorm();
            }
            err[static_cast<size_t>(v)] += std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
        }
    }

    V1Search out;
    out.error_curve.resize(err.size());
    size_t best = 0;
    for (size_t v = 0; v < err.size(); ++v) {
        out.error_curve[v] = err[v] / trials;
        if (err[v] < err[best]) best = v;
    }
    out.v1_star = static_cast<int>(best) + 1;
    for (size_t v = 0; v < err.size(); ++v)
        if (v != best && std::abs(err[v] - err[best]) <= 1e-12 * std::abs(err[best])) out.tie = true;
    return out;
}

}  // namespace polyqr
