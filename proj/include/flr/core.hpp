#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Bad input: wrong shape, out-of-range parameter, malformed labels.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical kernel (SVD, factorization) failed or produced non-finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The solver produced a non-finite iterate.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t iteration, const std::string& what)
        : NumericError(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Nonnegative shrinkage / threshold amount.
class Threshold {
public:
    explicit Threshold(double value) : value_(value) {
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw ValidationError("threshold must be finite and nonnegative, got " +
                                  std::to_string(value));
        }
    }

    double value() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream oss;
    (oss << ... << std::forward<Args>(args));
    return oss.str();
}

/// Seventeen significant digits, enough to read back the same double.
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string shape_str(const Matrix& m) {
    return concat(m.rows(), "x", m.cols());
}

}  // namespace detail

/// Throws ValidationError unless `m` is non-empty with all finite entries.
inline void require_dense(const Matrix& m, std::string_view name) {
    if (m.rows() < 1 || m.cols() < 1) {
        throw ValidationError(detail::concat(name, ": matrix must be non-empty, got ",
                                             detail::shape_str(m)));
    }
    if (!m.allFinite()) {
        throw ValidationError(detail::concat(name, ": matrix has non-finite entries"));
    }
}

inline void require_shape(const Matrix& m, Index rows, Index cols, std::string_view name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ValidationError(detail::concat(name, ": expected ", rows, "x", cols, ", got ",
                                             detail::shape_str(m)));
    }
}

/// Throws ValidationError unless every row of `Y` has exactly one 1 and zeros elsewhere.
inline void require_one_hot(const Matrix& Y, std::string_view name) {
    require_dense(Y, name);
    for (Index i = 0; i < Y.rows(); ++i) {
        int ones = 0;
        for (Index j = 0; j < Y.cols(); ++j) {
            const double v = Y(i, j);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                throw ValidationError(detail::concat(name, ": row ", i, " has entry ", v,
                                                     " (labels must be one-hot)"));
            }
        }
        if (ones != 1) {
            throw ValidationError(detail::concat(name, ": row ", i, " has ", ones,
                                                 " ones (labels must be one-hot)"));
        }
    }
}

/// One-hot matrix with `classes` columns from class indices.
inline Matrix one_hot(const std::vector<Index>& labels, Index classes) {
    Matrix Y = Matrix::Zero(static_cast<Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            throw ValidationError(detail::concat("label ", labels[i], " out of range [0, ",
                                                 classes, ")"));
        }
        Y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return Y;
}

/// Class index of each row (position of the row maximum; first on ties).
inline std::vector<Index> class_indices(const Matrix& Y) {
    std::vector<Index> out(static_cast<std::size_t>(Y.rows()));
    for (Index i = 0; i < Y.rows(); ++i) Y.row(i).maxCoeff(&out[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace flr
