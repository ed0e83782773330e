#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "splab/tensors.hpp"

namespace splab {

/// Third-order Taylor value in k coordinates: value, gradient, Hessian and
/// third-derivative tensor, with arithmetic implementing the exact chain
/// rule. Recursions written once in this type yield machine-precision
/// derivatives of their outputs; it is how the autocovariance recursion is
/// differentiated analytically without hand-expanding the chain rule.
class Jet3 {
public:
    Jet3() = default;

    static Jet3 constant(int k, double v) {
        Jet3 j;
        j.a_ = v;
        j.g_ = Eigen::VectorXd::Zero(k);
        j.H_ = Eigen::MatrixXd::Zero(k, k);
        j.T_ = Tensor3(k);
        return j;
    }

    static Jet3 variable(int k, int index, double v) {
        Jet3 j = constant(k, v);
        j.g_[index] = 1.0;
        return j;
    }

    int dim() const { return static_cast<int>(g_.size()); }
    double value() const { return a_; }
    const Eigen::VectorXd& grad() const { return g_; }
    const Eigen::MatrixXd& hess() const { return H_; }
    const Tensor3& third() const { return T_; }

    friend Jet3 operator+(const Jet3& x, const Jet3& y) {
        Jet3 r = x;
        r.a_ += y.a_;
        r.g_ += y.g_;
        r.H_ += y.H_;
        r.T_ += y.T_;
        return r;
    }
    friend Jet3 operator-(const Jet3& x, const Jet3& y) {
        Jet3 r = x;
        r.a_ -= y.a_;
        r.g_ -= y.g_;
        r.H_ -= y.H_;
        Tensor3 t = r.T_ - y.T_;
        r.T_ = t;
        return r;
    }
    friend Jet3 operator-(const Jet3& x) {
        Jet3 r = x;
        r.a_ = -r.a_;
        r.g_ = -r.g_;
        r.H_ = -r.H_;
        r.T_ *= -1.0;
        return r;
    }

    friend Jet3 operator*(const Jet3& x, const Jet3& y) {
        const int k = x.dim();
        Jet3 r = constant(k, x.a_ * y.a_);
        r.g_ = x.a_ * y.g_ + y.a_ * x.g_;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                r.H_(i, j) = x.H_(i, j) * y.a_ + x.g_[i] * y.g_[j] +
                             x.g_[j] * y.g_[i] + x.a_ * y.H_(i, j);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < k; ++l)
                    r.T_(i, j, l) = x.T_(i, j, l) * y.a_ + x.a_ * y.T_(i, j, l) +
                                    x.H_(i, j) * y.g_[l] + x.H_(i, l) * y.g_[j] +
                                    x.H_(j, l) * y.g_[i] + x.g_[i] * y.H_(j, l) +
                                    x.g_[j] * y.H_(i, l) + x.g_[l] * y.H_(i, j);
        return r;
    }

    friend Jet3 operator*(double s, const Jet3& x) {
        Jet3 r = x;
        r.a_ *= s;
        r.g_ *= s;
        r.H_ *= s;
        r.T_ *= s;
        return r;
    }
    friend Jet3 operator*(const Jet3& x, double s) { return s * x; }
    friend Jet3 operator+(const Jet3& x, double s) {
        Jet3 r = x;
        r.a_ += s;
        return r;
    }
    friend Jet3 operator+(double s, const Jet3& x) { return x + s; }
    friend Jet3 operator-(const Jet3& x, double s) { return x + (-s); }

    Jet3& operator+=(const Jet3& y) {
        *this = *this + y;
        return *this;
    }

    /// Reciprocal 1/y; requires y.value() != 0.
    Jet3 recip() const {
        const int k = dim();
        const double y0 = a_;
        const double i1 = 1.0 / y0;
        const double i2 = i1 * i1;
        const double i3 = i2 * i1;
        const double i4 = i2 * i2;
        Jet3 r = constant(k, i1);
        r.g_ = -i2 * g_;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                r.H_(i, j) = -H_(i, j) * i2 + 2.0 * g_[i] * g_[j] * i3;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < k; ++l)
                    r.T_(i, j, l) = -T_(i, j, l) * i2 +
                                    2.0 * (H_(i, j) * g_[l] + H_(i, l) * g_[j] +
                                           H_(j, l) * g_[i]) * i3 -
                                    6.0 * g_[i] * g_[j] * g_[l] * i4;
        return r;
    }

    friend Jet3 operator/(const Jet3& x, const Jet3& y) { return x * y.recip(); }

    /// exp(y), exact to third order.
    Jet3 exp() const {
        const int k = dim();
        const double e = std::exp(a_);
        Jet3 r = constant(k, e);
        r.g_ = e * g_;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                r.H_(i, j) = e * (H_(i, j) + g_[i] * g_[j]);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < k; ++l)
                    r.T_(i, j, l) = e * (T_(i, j, l) + H_(i, j) * g_[l] +
                                         H_(i, l) * g_[j] + H_(j, l) * g_[i] +
                                         g_[i] * g_[j] * g_[l]);
        return r;
    }

private:
    double a_ = 0.0;
    Eigen::VectorXd g_;
    Eigen::MatrixXd H_;
    Tensor3 T_;
};

inline double scalar_value(double x) { return x; }
inline double scalar_value(const Jet3& x) { return x.value(); }

inline double make_like(double, double v) { return v; }
inline Jet3 make_like(const Jet3& proto, double v) {
    return Jet3::constant(proto.dim(), v);
}

} // namespace splab
