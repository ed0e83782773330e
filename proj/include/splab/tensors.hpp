#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace splab {

/// Dense rank-3 array indexed by parameter coordinates. Parameter dimension is
/// small (k <= 6 at desk scale), so full storage beats symmetric packing.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int k) : k_(k), v_(static_cast<size_t>(k) * k * k, 0.0) {}

    int dim() const { return k_; }

    double& operator()(int i, int j, int l) { return v_[idx(i, j, l)]; }
    double operator()(int i, int j, int l) const { return v_[idx(i, j, l)]; }

    void setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

    Tensor3& operator+=(const Tensor3& o) {
        for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    Tensor3& operator*=(double s) {
        for (double& x : v_) x *= s;
        return *this;
    }
    friend Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
        Tensor3 r(a.k_);
        for (size_t i = 0; i < a.v_.size(); ++i) r.v_[i] = a.v_[i] - b.v_[i];
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    size_t idx(int i, int j, int l) const {
        return (static_cast<size_t>(i) * k_ + j) * k_ + l;
    }
    int k_ = 0;
    std::vector<double> v_;
};

/// Dense rank-4 array indexed by parameter coordinates.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int k) : k_(k), v_(static_cast<size_t>(k) * k * k * k, 0.0) {}

    int dim() const { return k_; }

    double& operator()(int i, int j, int l, int m) { return v_[idx(i, j, l, m)]; }
    double operator()(int i, int j, int l, int m) const { return v_[idx(i, j, l, m)]; }

    void setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    size_t idx(int i, int j, int l, int m) const {
        return ((static_cast<size_t>(i) * k_ + j) * k_ + l) * k_ + m;
    }
    int k_ = 0;
    std::vector<double> v_;
};

} // namespace splab
