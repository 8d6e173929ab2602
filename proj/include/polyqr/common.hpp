#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <boost/rational.hpp>

namespace polyqr {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using Rational = boost::rational<std::int64_t>;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorKind {
    domain,
    degenerate,
    conditioning,
    parameter,
    unsupported_regime,
    missing_data,
    infeasible,
    numerical,
    schema,
    io,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Full-multiplication-equivalent counters, filled by the instrumented code paths.
// Interpolation is tallied as (entry, target) evaluations; the caller prices them with c_IP.
struct OpCounts {
    std::int64_t qr = 0;
    std::int64_t map = 0;
    std::int64_t demap = 0;
    std::int64_t reduction = 0;
    std::int64_t ip_H_evals = 0;
    std::int64_t ip_QR_evals = 0;
    std::int64_t ip_calls = 0;
    std::int64_t qcheck_evals = 0;  // q-check entries computed outside the base set (must stay 0)

    OpCounts& operator+=(const OpCounts& o) {
        qr += o.qr;
        map += o.map;
        demap += o.demap;
        reduction += o.reduction;
        ip_H_evals += o.ip_H_evals;
        ip_QR_evals += o.ip_QR_evals;
        ip_calls += o.ip_calls;
        qcheck_evals += o.qcheck_evals;
        return *this;
    }
};

}  // namespace polyqr
