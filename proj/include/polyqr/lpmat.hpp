#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyqr/common.hpp"

namespace polyqr {

struct UnitCirclePoint {
    cd value{1.0, 0.0};
    std::optional<int> tone_index;
    int grid_size = 0;
};

UnitCirclePoint tone_point(int n, int N);
UnitCirclePoint unit_point(cd value);

struct Degree {
    int v1 = 0;
    int v2 = 0;
    int total() const { return v1 + v2; }
    bool operator==(const Degree&) const = default;
};

Degree degree_of_product(Degree a, Degree b);
Degree degree_of_sum(Degree a, Degree b);
Degree degree_of_hermitian(Degree a);

// A(s) = sum_{v=-v1}^{v2} A_v s^{-v}, coefficients stored for v = -v1 .. v2.
class LaurentPolyMatrix {
public:
    LaurentPolyMatrix() = default;
    LaurentPolyMatrix(int v1, int v2, std::vector<CMat> coeffs);
    static LaurentPolyMatrix zeros(int v1, int v2, int rows, int cols);

    int v1() const { return v1_; }
    int v2() const { return v2_; }
    int max_degree() const { return v1_ + v2_; }
    Degree degree() const { return {v1_, v2_}; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }

    const CMat& coeff(int v) const { return coeffs_.at(static_cast<size_t>(v + v1_)); }
    CMat& coeff(int v) { return coeffs_.at(static_cast<size_t>(v + v1_)); }
    const std::vector<CMat>& coeffs() const { return coeffs_; }

    CMat eval(cd s) const;
    CMat eval(const UnitCirclePoint& p) const { return eval(p.value); }
    LaurentPolyMatrix hermitian() const;

private:
    int v1_ = 0, v2_ = 0;
    Eigen::Index rows_ = 0, cols_ = 0;
    std::vector<CMat> coeffs_;
};

// Rows [s^{v1}, s^{v1-1}, ..., s^{-v2}], one per point.
CMat point_matrix(const std::vector<cd>& pts, int v1, int v2);

// Rank-revealing (complete orthogonal) pseudoinverse; cond receives sigma_max/sigma_min
// over the numerically nonzero singular values, rank the detected rank.
CMat pseudo_inverse(const CMat& A, double rel_tol = 1e-12, double* cond = nullptr,
                    Eigen::Index* rank = nullptr);

// a = B^dagger a_B entrywise; least squares when more points than coefficients.
LaurentPolyMatrix fit_from_samples(const std::vector<UnitCirclePoint>& points,
                                   const std::vector<CMat>& samples, int v1, int v2,
                                   double cond_threshold = 1e12);

nlohmann::json to_json(const LaurentPolyMatrix& lp);
LaurentPolyMatrix lp_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const CMat& m);
CMat matrix_from_json(const nlohmann::json& j);

}  // namespace polyqr
