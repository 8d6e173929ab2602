#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "polyqr/qr.hpp"

namespace polyqr {

// Mapped slice for columns k0..k0+m-1: Qtilde P x m, Rtilde m x n, n >= m (rows k0..,
// columns k0..; upper trapezoidal),
// delta = (Delta_{k0}, ..., Delta_{k0+m-1}), scale = Delta_{k-1} [R]_{k,k}.
struct MappedFactors {
    CMat Qtilde;
    CMat Rtilde;
    std::vector<double> delta;
    std::vector<double> scale;
    double delta_prefix = 1.0;  // Delta_{k0-1}
    bool leading = true;        // k0 = 1 (Delta_0 = 1 is a constant, not a product)
};

// Q: P x m, R: m x n block of rows/columns k0.. . delta_prefix = Delta_{k0-1}; nullopt for
// k0 = 1. first_col, when given (k0 = 1 only), is the first column of A and is copied.
MappedFactors map_forward(const CMat& Q, const CMat& R,
                          std::optional<double> delta_prefix = std::nullopt,
                          const CVec* first_col = nullptr, std::int64_t* mults = nullptr);

MappedFactors map_forward(const QRFactors& f, int k0, double delta_prefix,
                          const CMat* A = nullptr);

struct InverseOptions {
    double rank_tol = 1e-10;
};

// Returns the QR slice (Q: P x m, R: m x n). When a diagonal entry of Rtilde drops below
// rank_tol * max diag, the trailing factors are recovered from the original matrix; fetch_A
// must then provide the full P x (k0-1+m) matrix A (columns 1..k0+m-1) at the same tone,
// and k0 must be 1.
QRFactors map_inverse(const MappedFactors& mf, const std::function<CMat()>& fetch_A = {},
                      std::int64_t* mults = nullptr, const InverseOptions& opt = {},
                      int* detected_rank = nullptr);

}  // namespace polyqr
