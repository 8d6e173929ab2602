#include "polyqr/lpmat.hpp"

#include <algorithm>
#include <cmath>

namespace polyqr {

const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::unsupported_regime: return "unsupported_regime";
    case ErrorKind::missing_data: return "missing_data";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

UnitCirclePoint tone_point(int n, int N) {
    if (N < 1 || n < 0 || n >= N)
        fail(ErrorKind::domain, "tone index " + std::to_string(n) + " outside [0, " +
                                    std::to_string(N) + ")");
    UnitCirclePoint p;
    // exact values at the quarter turns keep trivial cases bit-clean
    const long long q = 4LL * n;
    if (q % N == 0) {
        static const cd quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        p.value = quarter[(q / N) % 4];
    } else {
        p.value = std::polar(1.0, 2.0 * kPi * n / N);
    }
    p.tone_index = n;
    p.grid_size = N;
    return p;
}

UnitCirclePoint unit_point(cd value) {
    if (std::abs(std::abs(value) - 1.0) > 1e-12)
        fail(ErrorKind::domain, "point is not on the unit circle");
    UnitCirclePoint p;
    p.value = value;
    return p;
}

Degree degree_of_product(Degree a, Degree b) { return {a.v1 + b.v1, a.v2 + b.v2}; }
Degree degree_of_sum(Degree a, Degree b) { return {std::max(a.v1, b.v1), std::max(a.v2, b.v2)}; }
Degree degree_of_hermitian(Degree a) { return {a.v2, a.v1}; }

LaurentPolyMatrix::LaurentPolyMatrix(int v1, int v2, std::vector<CMat> coeffs)
    : v1_(v1), v2_(v2), coeffs_(std::move(coeffs)) {
    if (v1 < 0 || v2 < 0) fail(ErrorKind::parameter, "negative LP degree");
    if (coeffs_.size() != static_cast<size_t>(v1 + v2 + 1))
        fail(ErrorKind::parameter, "coefficient count must be v1 + v2 + 1");
    rows_ = coeffs_.front().rows();
    cols_ = coeffs_.front().cols();
    for (const auto& c : coeffs_)
        if (c.rows() != rows_ || c.cols() != cols_)
            fail(ErrorKind::parameter, "coefficient matrices differ in shape");
}

LaurentPolyMatrix LaurentPolyMatrix::zeros(int v1, int v2, int rows, int cols) {
    return LaurentPolyMatrix(v1, v2,
                             std::vector<CMat>(static_cast<size_t>(v1 + v2 + 1),
                                               CMat::Zero(rows, cols)));
}

CMat LaurentPolyMatrix::eval(cd s) const {
    // Horner in s^{-1} = conj(s) on the causal part, in s on the anticausal part
    const cd sinv = std::conj(s);
    CMat acc = coeff(v2_);
    for (int v = v2_ - 1; v >= 0; --v) acc = acc * sinv + coeff(v);
    if (v1_ == 0) return acc;
    CMat neg = coeff(-v1_);
    for (int v = v1_ - 1; v >= 1; --v) neg = neg * s + coeff(-v);
    return acc + neg * s;
}

LaurentPolyMatrix LaurentPolyMatrix::hermitian() const {
    std::vector<CMat> c;
    c.reserve(coeffs_.size());
    // A^H(s) = sum_v A_v^H s^{v}: coefficient at -v is A_v^H
    for (int v = -v2_; v <= v1_; ++v) c.push_back(coeff(-v).adjoint());
    return LaurentPolyMatrix(v2_, v1_, std::move(c));
}

CMat point_matrix(const std::vector<cd>& pts, int v1, int v2) {
    CMat B(static_cast<Eigen::Index>(pts.size()), v1 + v2 + 1);
    for (size_t i = 0; i < pts.size(); ++i) {
        const cd s = pts[i];
        for (int c = 0; c <= v1 + v2; ++c) {
            const int p = v1 - c;  // power of s
            B(static_cast<Eigen::Index>(i), c) = p >= 0 ? std::pow(s, p) : std::pow(std::conj(s), -p);
        }
    }
    return B;
}

CMat pseudo_inverse(const CMat& A, double rel_tol, double* cond, Eigen::Index* rank) {
    Eigen::BDCSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > rel_tol * smax) ++r;
    if (rank) *rank = r;
    if (cond) *cond = r ? smax / sv(r - 1) : INFINITY;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < r; ++i) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

LaurentPolyMatrix fit_from_samples(const std::vector<UnitCirclePoint>& points,
                                   const std::vector<CMat>& samples, int v1, int v2,
                                   double cond_threshold) {
    if (v1 < 0 || v2 < 0) fail(ErrorKind::parameter, "negative LP degree");
    if (points.size() != samples.size())
        fail(ErrorKind::parameter, "point and sample counts differ");
    if (points.size() < static_cast<size_t>(v1 + v2 + 1))
        fail(ErrorKind::parameter, "fewer points than coefficients");
    std::vector<cd> pts;
    for (const auto& p : points) pts.push_back(p.value);
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            if (std::abs(pts[i] - pts[j]) < 1e-14)
                fail(ErrorKind::degenerate, "duplicate base points");
    const auto rows = samples.front().rows(), cols = samples.front().cols();
    for (const auto& s : samples)
        if (s.rows() != rows || s.cols() != cols)
            fail(ErrorKind::parameter, "samples differ in shape");

    double cond = 0;
    Eigen::Index rank = 0;
    const CMat Bp = pseudo_inverse(point_matrix(pts, v1, v2), 1e-12, &cond, &rank);
    if (rank < v1 + v2 + 1 || cond > cond_threshold)
        fail(ErrorKind::conditioning, "base-point matrix condition estimate " + std::to_string(cond));

    // stack samples as (points x entries), solve all entries at once
    CMat S(static_cast<Eigen::Index>(pts.size()), rows * cols);
    for (size_t i = 0; i < samples.size(); ++i)
        S.row(static_cast<Eigen::Index>(i)) = samples[i].reshaped().transpose();
    const CMat C = Bp * S;
    std::vector<CMat> coeffs;
    // row c of C holds the coefficient of s^{v1-c}, i.e. A_v with v = c - v1
    for (int c = 0; c <= v1 + v2; ++c) coeffs.push_back(C.row(c).transpose().reshaped(rows, cols));
    return LaurentPolyMatrix(v1, v2, std::move(coeffs));
}

nlohmann::json matrix_to_json(const CMat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

CMat matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        fail(ErrorKind::schema, "matrix must be a non-empty array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = static_cast<Eigen::Index>(j[0].size());
    CMat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c)
            fail(ErrorKind::schema, "ragged matrix rows");
        for (Eigen::Index k = 0; k < c; ++k) {
            const auto& e = j[i][k];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                fail(ErrorKind::schema, "matrix entries must be [re, im]");
            m(i, k) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    return m;
}

nlohmann::json to_json(const LaurentPolyMatrix& lp) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : lp.coeffs()) coeffs.push_back(matrix_to_json(c));
    return {{"v1", lp.v1()}, {"v2", lp.v2()}, {"rows", lp.rows()}, {"cols", lp.cols()},
            {"coeffs", coeffs}};
}

LaurentPolyMatrix lp_from_json(const nlohmann::json& j) {
    static const char* keys[] = {"v1", "v2", "rows", "cols", "coeffs"};
    if (!j.is_object()) fail(ErrorKind::schema, "LP matrix must be a JSON object");
    for (const auto& k : keys)
        if (!j.contains(k)) fail(ErrorKind::schema, std::string("LP matrix missing key '") + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(keys), std::end(keys),
                         [&](const char* k) { return it.key() == k; }) == std::end(keys))
            fail(ErrorKind::schema, "unknown key '" + it.key() + "' in LP matrix");
    const int v1 = j["v1"].get<int>(), v2 = j["v2"].get<int>();
    const int rows = j["rows"].get<int>(), cols = j["cols"].get<int>();
    std::vector<CMat> coeffs;
    for (const auto& c : j["coeffs"]) {
        coeffs.push_back(matrix_from_json(c));
        if (coeffs.back().rows() != rows || coeffs.back().cols() != cols)
            fail(ErrorKind::schema, "coefficient shape disagrees with rows/cols");
    }
    if (coeffs.size() != static_cast<size_t>(v1 + v2 + 1))
        fail(ErrorKind::schema, "coeffs length must be v1 + v2 + 1");
    return LaurentPolyMatrix(v1, v2, std::move(coeffs));
}

}  // namespace polyqr
