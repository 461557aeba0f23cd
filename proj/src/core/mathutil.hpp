#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnhp {

inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit argument outside (0, 1)");
    return std::log(p / (1.0 - p));
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

inline double inverse_softplus(double y) {
    if (y <= 0.0) throw std::invalid_argument("inverse_softplus argument must be positive");
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

}  // namespace cnhp
