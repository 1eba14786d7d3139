#pragma once

#include <array>
#include <cmath>

namespace ghbs {

/// Symmetric second-order tensor stored as six independent components
/// in Voigt-style order (xx, yy, zz, xy, yz, xz). Off-diagonal entries
/// are the tensor components themselves, not engineering values.
struct SymTensor2 {
    std::array<double, 6> v{};

    static SymTensor2 zero() { return SymTensor2{}; }

    static SymTensor2 identity() {
        SymTensor2 t;
        t.v = {1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
        return t;
    }

    static SymTensor2 diag(double a, double b, double c) {
        SymTensor2 t;
        t.v = {a, b, c, 0.0, 0.0, 0.0};
        return t;
    }

    double xx() const { return v[0]; }
    double yy() const { return v[1]; }
    double zz() const { return v[2]; }

    double trace() const { return v[0] + v[1] + v[2]; }

    SymTensor2 dev() const {
        const double m = trace() / 3.0;
        SymTensor2 d = *this;
        d.v[0] -= m;
        d.v[1] -= m;
        d.v[2] -= m;
        return d;
    }

    /// Frobenius norm, counting off-diagonal components twice.
    double norm() const {
        return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] +
                         2.0 * (v[3] * v[3] + v[4] * v[4] + v[5] * v[5]));
    }

    double dot(const SymTensor2& o) const {
        return v[0] * o.v[0] + v[1] * o.v[1] + v[2] * o.v[2] +
               2.0 * (v[3] * o.v[3] + v[4] * o.v[4] + v[5] * o.v[5]);
    }

    SymTensor2& operator+=(const SymTensor2& o) {
        for (int i = 0; i < 6; ++i) v[i] += o.v[i];
        return *this;
    }
    SymTensor2& operator-=(const SymTensor2& o) {
        for (int i = 0; i < 6; ++i) v[i] -= o.v[i];
        return *this;
    }
    SymTensor2& operator*=(double s) {
        for (int i = 0; i < 6; ++i) v[i] *= s;
        return *this;
    }

    friend SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
    friend SymTensor2 operator-(SymTensor2 a, const SymTensor2& b) { return a -= b; }
    friend SymTensor2 operator*(SymTensor2 a, double s) { return a *= s; }
    friend SymTensor2 operator*(double s, SymTensor2 a) { return a *= s; }
};

}  // namespace ghbs
