#pragma once

#include <random>

#include "polyqr/lpmat.hpp"

namespace testutil {

using namespace polyqr;

inline CMat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = {g(rng), g(rng)};
    return m;
}

inline LaurentPolyMatrix random_lp(std::mt19937_64& rng, int v1, int v2, int r, int c) {
    std::vector<CMat> cs;
    for (int v = -v1; v <= v2; ++v) cs.push_back(random_matrix(rng, r, c));
    return LaurentPolyMatrix(v1, v2, cs);
}

inline double rel_err(const CMat& a, const CMat& b) {
    const double n = std::max(b.norm(), 1e-300);
    return (a - b).norm() / n;
}

inline double max_abs(const CMat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

// sum_v A_v s^{-v} evaluated term by term (no Horner), the independent evaluation oracle
inline CMat naive_eval(const LaurentPolyMatrix& lp, cd s) {
    CMat acc = CMat::Zero(lp.rows(), lp.cols());
    for (int v = -lp.v1(); v <= lp.v2(); ++v) acc += lp.coeff(v) * std::exp(cd(0, -std::arg(s) * v));
    return acc;
}

}  // namespace testutil
