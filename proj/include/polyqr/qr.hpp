#pragma once

#include <optional>

#include "polyqr/common.hpp"

namespace polyqr {

enum class QRKind { GS, UT, REGULARIZED, AUGMENTED };

struct QRFactors {
    CMat Q;                     // P x M (augmented: (P+M) x M, i.e. Qbar)
    CMat R;                     // M x M upper triangular, real nonnegative diagonal
    std::optional<CMat> Q_perp; // UT by-product, P x (P-M)
    QRKind kind = QRKind::UT;
    std::optional<double> alpha;
};

struct RankProfile {
    int K = 0;
    double tol = 0;
};

// Gram-Schmidt; y_k below zero_tol * scale takes the zero branch.
// scale <= 0 selects ||A||_F.
QRFactors gs_qr(const CMat& A, double zero_tol = 1e-10, double scale = -1);

// Givens rotations in standard form [A | I_P]. Structural zeros (exact zeros of A) and real
// entries are skipped; *mults receives full-multiplication equivalents.
QRFactors givens_qr(const CMat& A, std::int64_t* mults = nullptr);

// Standard-form triangularisation of [X | Y] with X: rows x M, Y: rows x W. On return
// X holds [R; 0] and Y the transformed block. Exposed for the regularized variants.
void givens_standard_form(CMat& X, CMat& Y, std::int64_t* mults = nullptr);

QRFactors regularized_qr(const CMat& A, double alpha, std::int64_t* mults = nullptr);
QRFactors augmented_qr(const CMat& A, double alpha, std::int64_t* mults = nullptr);
QRFactors mmse_qr(const CMat& H, double sigma_w, int M_T, std::int64_t* mults = nullptr);

RankProfile ordered_column_rank(const CMat& A, double tol = 1e-10);

// QR validity checks; returns the worst violation (0 when exactly valid).
struct QRCheck {
    double orthonormality = 0;  // nonzero columns of Q
    double triangularity = 0;   // below-diagonal magnitude of R
    double diag_imag = 0;
    double diag_negative = 0;
    double residual = 0;        // ||R - Q^H A||_max
};
QRCheck check_qr(const CMat& A, const CMat& Q, const CMat& R, double zero_col_tol = 1e-9);

}  // namespace polyqr
