#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace hyperlab {

template <class Scalar> using Vec4T = Eigen::Matrix<Scalar, 4, 1>;
template <class Scalar> using Mat4T = Eigen::Matrix<Scalar, 4, 4>;
template <class Scalar> using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <class Scalar> using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec4 = Vec4T<double>;
using Mat4 = Mat4T<double>;
using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Rank-4 tensor with 4 slots of dimension 4, stored densely.
template <class Scalar> struct Tensor4T {
    std::array<Scalar, 256> a{};

    Scalar& operator()(int i, int j, int k, int l) { return a[((i * 4 + j) * 4 + k) * 4 + l]; }
    Scalar operator()(int i, int j, int k, int l) const { return a[((i * 4 + j) * 4 + k) * 4 + l]; }
    void setZero() { a.fill(Scalar(0)); }
    Scalar max_abs() const
    {
        Scalar m(0);
        for (const Scalar& v : a) m = std::max(m, Scalar(v < 0 ? -v : v));
        return m;
    }
};

/// Rank-3 tensor with slots of dimension 4, stored as four 4x4 matrices: t[i](j,k).
template <class Scalar> using Tensor3T = std::array<Mat4T<Scalar>, 4>;

using Tensor4 = Tensor4T<double>;
using Tensor3 = Tensor3T<double>;

/// Base class for every error raised by the library.  `kind()` is a stable
/// machine-readable name (used for CSV status columns and CLI exit codes).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind))
    {
    }
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

/// Errors caused by invalid input (configuration, preconditions).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Errors raised when a numerical procedure cannot deliver its contract.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Metric inner product <X, Y>_g.
inline double dot(const Mat4& g, const Vec4& x, const Vec4& y) { return x.dot(g * y); }

} // namespace hyperlab
