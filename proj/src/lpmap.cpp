#include "polyqr/lpmap.hpp"

#include <cmath>

namespace polyqr {

namespace {

std::int64_t nonzeros(const auto& v) {
    std::int64_t n = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) n += v(i) != cd(0);
    return n;
}

}  // namespace

MappedFactors map_forward(const CMat& Q, const CMat& R, std::optional<double> delta_prefix,
                          const CVec* first_col, std::int64_t* mults) {
    const Eigen::Index m = R.rows(), n = R.cols();
    if (n < m || Q.cols() != m) fail(ErrorKind::parameter, "map_forward shape mismatch");
    MappedFactors mf;
    mf.Qtilde = Q;
    mf.Rtilde = R;
    mf.leading = !delta_prefix.has_value();
    mf.delta_prefix = delta_prefix.value_or(1.0);
    if (first_col && !mf.leading) fail(ErrorKind::parameter, "first column copy needs k0 = 1");
    std::int64_t count = 0;
    double D = mf.delta_prefix;
    for (Eigen::Index j = 0; j < m; ++j) {
        const cd rjj = R(j, j);
        if (std::abs(rjj.imag()) > 1e-12) fail(ErrorKind::numerical, "R diagonal is not real");
        const double r = rjj.real();
        const bool unit_prefix = j == 0 && mf.leading;
        const double s = unit_prefix ? r : D * r;
        if (!unit_prefix) ++count;
        const double Dn = s * r;
        ++count;
        if (!std::isfinite(Dn)) fail(ErrorKind::numerical, "Delta recursion overflowed");
        if (j == 0 && first_col) {
            mf.Qtilde.col(0) = *first_col;  // q~_1 = a_1
        } else {
            count += nonzeros(Q.col(j));
            mf.Qtilde.col(j) *= s;
        }
        for (Eigen::Index l = j + 1; l < n; ++l) mf.Rtilde(j, l) *= s;
        count += n - j - 1;
        mf.Rtilde(j, j) = Dn;
        mf.scale.push_back(s);
        mf.delta.push_back(Dn);
        D = Dn;
    }
    if (mults) *mults += count;
    return mf;
}

MappedFactors map_forward(const QRFactors& f, int k0, double delta_prefix, const CMat* A) {
    const Eigen::Index M = f.R.cols();
    if (k0 < 1 || k0 > M) fail(ErrorKind::parameter, "start column out of range");
    const Eigen::Index m = M - k0 + 1;
    CVec a1;
    if (A && k0 == 1) a1 = A->col(0);
    return map_forward(f.Q.rightCols(m), f.R.bottomRightCorner(m, m),
                       k0 == 1 ? std::nullopt : std::optional<double>(delta_prefix),
                       (A && k0 == 1) ? &a1 : nullptr, nullptr);
}

QRFactors map_inverse(const MappedFactors& mf, const std::function<CMat()>& fetch_A,
                      std::int64_t* mults, const InverseOptions& opt, int* detected_rank) {
    const Eigen::Index m = mf.Rtilde.rows(), n = mf.Rtilde.cols(), P = mf.Qtilde.rows();
    std::int64_t count = 0;
    double dmax = 0;
    for (Eigen::Index j = 0; j < m; ++j) dmax = std::max(dmax, mf.Rtilde(j, j).real());
    Eigen::Index K = 0;
    while (K < m && mf.Rtilde(K, K).real() > opt.rank_tol * dmax) ++K;
    if (detected_rank) *detected_rank = static_cast<int>(K);

    QRFactors f;
    f.kind = QRKind::UT;
    f.Q = CMat::Zero(P, m);
    f.R = CMat::Zero(m, n);
    const bool unit_prefix = mf.leading;
    double prev = mf.delta_prefix;
    for (Eigen::Index j = 0; j < K; ++j) {
        const double d = mf.Rtilde(j, j).real();
        double inv;
        if (j == 0 && unit_prefix) {
            inv = 1.0 / std::sqrt(d);  // R_11 = sqrt(R~_11), scale 1/R_11
        } else {
            inv = 1.0 / std::sqrt(prev * d);
            ++count;
        }
        f.Q.col(j) = mf.Qtilde.col(j) * inv;
        count += nonzeros(mf.Qtilde.col(j));
        for (Eigen::Index l = j + 1; l < n; ++l) f.R(j, l) = mf.Rtilde(j, l) * inv;
        count += n - j - 1;
        if (j == 0 && unit_prefix) {
            f.R(0, 0) = std::sqrt(d);
        } else {
            f.R(j, j) = d * inv;
            ++count;
        }
        prev = d;
    }
    if (mults) *mults += count;
    if (K == m) return f;

    if (!fetch_A)
        fail(ErrorKind::missing_data, "rank-deficient tone needs the channel columns for recovery");
    if (!mf.leading || n != m)
        fail(ErrorKind::parameter, "rank-deficient recovery needs the full column range");
    const CMat A = fetch_A();
    if (A.rows() != P || A.cols() != m) fail(ErrorKind::parameter, "recovery matrix shape mismatch");
    // residual A_{K+1..M} - Q_{1..K} R_{1..K, K+1..M}, or A itself for K = 0
    CMat res = A.rightCols(m - K);
    if (K > 0) res -= f.Q.leftCols(K) * f.R.topRightCorner(K, m - K);
    const QRFactors tail = gs_qr(res, opt.rank_tol, A.norm());
    f.Q.rightCols(m - K) = tail.Q;
    f.R.bottomRightCorner(m - K, m - K) = tail.R;
    return f;
}

}  // namespace polyqr
