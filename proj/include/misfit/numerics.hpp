#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace misfit {

/// Compensated (Neumaier) accumulator. Deterministic for a fixed add order.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Antiderivative family for the log kernel. All take z >= 0 and are
// continuous at 0 with value 0.
//
//   p1(z)  = ∫ log z dz           = z log z − z
//   p2(z)  = ∫ z log z dz         = z²(2 log z − 1)/4
//   hlog(z)  : ∫∫ primitive of log, h'' = log:  z²(2 log z − 3)/4
//   hlog_d(z): derivative of hlog:               z(log z − 1)
//
// hlog/hlog_d are extended as even/odd functions of z so that the
// rectangle identity
//   ∫∫_R log|s−t| dt ds = hlog(s2−t1) − hlog(s1−t1) − hlog(s2−t2) + hlog(s1−t2)
// holds for overlapping rectangles as well.

inline double p1(double z) { return z > 0.0 ? z * std::log(z) - z : 0.0; }
inline double p2(double z) { return z > 0.0 ? 0.25 * z * z * (2.0 * std::log(z) - 1.0) : 0.0; }

inline double hlog(double z) {
    double a = std::abs(z);
    return a > 0.0 ? 0.25 * a * a * (2.0 * std::log(a) - 3.0) : 0.0;
}

inline double hlog_d(double z) {
    double a = std::abs(z);
    if (a == 0.0) return 0.0;
    double v = a * (std::log(a) - 1.0);
    return z > 0.0 ? v : -v;
}

/// floor with a relative tolerance, for ratios like l/γ that are integral in
/// exact arithmetic but land just below an integer in binary.
inline long tolerant_floor(double x, double rel_tol = 1e-9) {
    return static_cast<long>(std::floor(x + rel_tol * std::max(1.0, std::abs(x))));
}

/// Fractional part in [0, 1).
inline double fract(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f = 0.0; // guards against x = -tiny rounding up
    return f;
}

} // namespace misfit
