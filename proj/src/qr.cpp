#include "polyqr/qr.hpp"

#include <cmath>
#include <vector>

namespace polyqr {

namespace {

using Mask = Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>;

Mask nonzero_mask(const CMat& M) {
    Mask m(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) m(i, j) = M(i, j) != cd(0) ? 1 : 0;
    return m;
}

void clean_lower(CMat& R) {
    for (Eigen::Index j = 0; j < R.cols(); ++j)
        for (Eigen::Index i = j + 1; i < R.rows(); ++i) R(i, j) = 0;
    for (Eigen::Index k = 0; k < std::min(R.rows(), R.cols()); ++k) {
        double d = R(k, k).real();
        if (std::abs(d) <= 1e-12 && d <= 0) d = 0;  // negative zero counts as a rank drop
        R(k, k) = d;
    }
}

}  // namespace

void givens_standard_form(CMat& X, CMat& Y, std::int64_t* mults) {
    const Eigen::Index rows = X.rows(), M = X.cols(), W = Y.cols();
    if (Y.rows() != rows) fail(ErrorKind::parameter, "standard form blocks differ in rows");
    Mask xm = nonzero_mask(X), ym = nonzero_mask(Y);
    std::int64_t count = 0;
    std::vector<Eigen::Index> active;

    for (Eigen::Index j = 0; j < M && j < rows; ++j) {
        active.clear();
        for (Eigen::Index i = j; i < rows; ++i)
            if (xm(i, j)) active.push_back(i);

        // phase rotations make every pivot candidate real (vectoring itself is free)
        for (Eigen::Index i : active) {
            const cd x = X(i, j);
            if (x.imag() == 0) continue;
            const double a = std::abs(x);
            const cd ph = std::conj(x) / a;
            for (Eigen::Index c = j + 1; c < M; ++c)
                if (xm(i, c)) { X(i, c) *= ph; ++count; }
            for (Eigen::Index c = 0; c < W; ++c)
                if (ym(i, c)) { Y(i, c) *= ph; ++count; }
            X(i, j) = a;
        }

        // real rotations on adjacent active rows, bottom-up
        for (size_t t = active.size(); t > 1; --t) {
            const Eigen::Index a = active[t - 2], b = active[t - 1];
            const double xa = X(a, j).real(), xb = X(b, j).real();
            const double r = std::hypot(xa, xb);
            const double c = xa / r, s = xb / r;
            for (Eigen::Index col = j + 1; col < M; ++col) {
                if (!xm(a, col) && !xm(b, col)) continue;
                const cd ua = X(a, col), ub = X(b, col);
                X(a, col) = c * ua + s * ub;
                X(b, col) = -s * ua + c * ub;
                xm(a, col) = xm(b, col) = 1;
                count += 2;
            }
            for (Eigen::Index col = 0; col < W; ++col) {
                if (!ym(a, col) && !ym(b, col)) continue;
                const cd ua = Y(a, col), ub = Y(b, col);
                Y(a, col) = c * ua + s * ub;
                Y(b, col) = -s * ua + c * ub;
                ym(a, col) = ym(b, col) = 1;
                count += 2;
            }
            X(a, j) = r;
            X(b, j) = 0;
            xm(b, j) = 0;
        }

        if (!active.empty()) {
            const Eigen::Index top = active.front();
            if (top != j) {  // row exchange is free
                X.row(j).swap(X.row(top));
                Y.row(j).swap(Y.row(top));
                xm.row(j).swap(xm.row(top));
                ym.row(j).swap(ym.row(top));
            }
            if (X(j, j).real() < 0) {  // sign flip is free
                X.row(j) = -X.row(j);
                Y.row(j) = -Y.row(j);
            }
        }
    }
    if (mults) *mults += count;
}

QRFactors givens_qr(const CMat& A, std::int64_t* mults) {
    const Eigen::Index P = A.rows(), M = A.cols();
    if (P < M) fail(ErrorKind::parameter, "givens_qr needs P >= M");
    CMat X = A;
    CMat Y = CMat::Identity(P, P);
    givens_standard_form(X, Y, mults);
    QRFactors f;
    f.R = X.topRows(M);
    clean_lower(f.R);
    f.Q = Y.topRows(M).adjoint();
    if (P > M) f.Q_perp = Y.bottomRows(P - M).adjoint();
    f.kind = QRKind::UT;
    return f;
}

QRFactors regularized_qr(const CMat& A, double alpha, std::int64_t* mults) {
    if (!(alpha > 0)) fail(ErrorKind::parameter, "regularization parameter must be positive");
    const Eigen::Index P = A.rows(), M = A.cols();
    CMat X(P + M, M);
    X << A, alpha * CMat::Identity(M, M);
    CMat Y = CMat::Zero(P + M, P);
    Y.topRows(P).setIdentity();
    givens_standard_form(X, Y, mults);
    QRFactors f;
    f.R = X.topRows(M);
    clean_lower(f.R);
    f.Q = Y.topRows(M).adjoint();
    f.kind = QRKind::REGULARIZED;
    f.alpha = alpha;
    return f;
}

QRFactors augmented_qr(const CMat& A, double alpha, std::int64_t* mults) {
    if (!(alpha > 0)) fail(ErrorKind::parameter, "regularization parameter must be positive");
    const Eigen::Index P = A.rows(), M = A.cols();
    CMat X(P + M, M);
    X << A, alpha * CMat::Identity(M, M);
    CMat Y = CMat::Identity(P + M, P + M);
    givens_standard_form(X, Y, mults);
    QRFactors f;
    f.R = X.topRows(M);
    clean_lower(f.R);
    f.Q = Y.topRows(M).adjoint();
    f.kind = QRKind::AUGMENTED;
    f.alpha = alpha;
    return f;
}

QRFactors mmse_qr(const CMat& H, double sigma_w, int M_T, std::int64_t* mults) {
    if (H.rows() < H.cols()) fail(ErrorKind::parameter, "mmse_qr needs M_R >= M_T");
    if (sigma_w < 0) fail(ErrorKind::parameter, "noise standard deviation must be nonnegative");
    if (sigma_w == 0) {
        QRFactors f = givens_qr(H, mults);
        f.alpha = 0.0;  // degenerate: plain QR, flagged through alpha = 0
        return f;
    }
    return regularized_qr(H, std::sqrt(static_cast<double>(M_T)) * sigma_w, mults);
}

QRFactors gs_qr(const CMat& A, double zero_tol, double scale) {
    const Eigen::Index P = A.rows(), M = A.cols();
    if (P < M) fail(ErrorKind::parameter, "gs_qr needs P >= M");
    if (scale <= 0) scale = A.norm();
    QRFactors f;
    f.Q = CMat::Zero(P, M);
    f.R = CMat::Zero(M, M);
    f.kind = QRKind::GS;
    for (Eigen::Index k = 0; k < M; ++k) {
        CVec y = A.col(k);
        // y_k = a_k - sum_i [R]_{i,k} q_i, with one re-orthogonalisation pass
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < k; ++i) y -= f.Q.col(i) * f.Q.col(i).dot(y);
        const double ny = y.norm();
        if (scale == 0 || ny <= zero_tol * scale) continue;  // zero branch: q_k = 0, r_k = 0
        f.Q.col(k) = y / ny;
        // r_k^T = q_k^H A
        for (Eigen::Index l = k + 1; l < M; ++l) f.R(k, l) = f.Q.col(k).dot(A.col(l));
        f.R(k, k) = ny;
    }
    return f;
}

RankProfile ordered_column_rank(const CMat& A, double tol) {
    if (!(tol > 0)) fail(ErrorKind::parameter, "rank tolerance must be positive");
    const double scale = A.norm();
    RankProfile rp{0, tol};
    CMat Q(A.rows(), 0);
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
        CVec y = A.col(k);
        for (int pass = 0; pass < 2; ++pass)
            if (Q.cols()) y -= Q * (Q.adjoint() * y);
        const double ny = y.norm();
        if (scale == 0 || ny <= tol * scale) break;
        Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
        Q.col(Q.cols() - 1) = y / ny;
        ++rp.K;
    }
    return rp;
}

QRCheck check_qr(const CMat& A, const CMat& Q, const CMat& R, double zero_col_tol) {
    QRCheck c;
    std::vector<Eigen::Index> nz;
    for (Eigen::Index k = 0; k < Q.cols(); ++k)
        if (Q.col(k).norm() > zero_col_tol) nz.push_back(k);
    for (Eigen::Index a : nz)
        for (Eigen::Index b : nz) {
            const cd g = Q.col(a).dot(Q.col(b));
            c.orthonormality = std::max(c.orthonormality, std::abs(g - (a == b ? 1.0 : 0.0)));
        }
    for (Eigen::Index j = 0; j < R.cols(); ++j)
        for (Eigen::Index i = j + 1; i < R.rows(); ++i)
            c.triangularity = std::max(c.triangularity, std::abs(R(i, j)));
    for (Eigen::Index k = 0; k < std::min(R.rows(), R.cols()); ++k) {
        c.diag_imag = std::max(c.diag_imag, std::abs(R(k, k).imag()));
        c.diag_negative = std::max(c.diag_negative, -R(k, k).real());
    }
    c.residual = (R - Q.adjoint() * A).cwiseAbs().maxCoeff();
    return c;
}

}  // namespace polyqr
