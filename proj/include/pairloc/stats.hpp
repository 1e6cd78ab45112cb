#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "pairloc/types.hpp"

namespace pairloc {

namespace detail {

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline real betacf(real a, real b, real x) {
    constexpr int kMaxIter = 300;
    constexpr real kEps = 3e-16, kFpMin = 1e-300;
    const real qab = a + b, qap = a + 1.0, qam = a - 1.0;
    real c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    real h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        real aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const real del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline real incomplete_beta(real a, real b, real x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const real bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Quantile of the Beta(a, b) law by bisection on the regularized CDF.
inline real beta_quantile(real p, real a, real b) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    real lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const real mid = 0.5 * (lo + hi);
        (incomplete_beta(a, b, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ConfidenceInterval {
    real low = 0;
    real high = 1;
};

/// Exact (Clopper-Pearson) binomial confidence interval for k successes in n
/// trials at confidence 1 - alpha.
inline ConfidenceInterval clopper_pearson(long k, long n, real alpha = 0.05) {
    if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("clopper_pearson: bad counts");
    ConfidenceInterval ci;
    const real kk = static_cast<real>(k), nn = static_cast<real>(n);
    ci.low = (k == 0) ? 0.0 : beta_quantile(alpha / 2.0, kk, nn - kk + 1.0);
    ci.high = (k == n) ? 1.0 : beta_quantile(1.0 - alpha / 2.0, kk + 1.0, nn - kk);
    return ci;
}

enum class BoundSide { none, upper, lower };
enum class RecordStatus { ok, bound_violated, bound_unresolvable };

/// A Monte Carlo probability estimate with its exact binomial CI and, when a
/// theoretical bound applies, the bound and the verdict of comparing the CI
/// against it.
struct ProbEstimate {
    real p_hat = 0;
    long k = 0;
    long n = 0;
    real ci_low = 0;
    real ci_high = 1;
    std::optional<real> bound_value;
    BoundSide bound_side = BoundSide::none;
    RecordStatus status = RecordStatus::ok;
};

inline ProbEstimate make_prob_estimate(long k, long n, std::optional<real> bound = std::nullopt,
                                       BoundSide side = BoundSide::none, real alpha = 0.05) {
    if (n <= 0) throw std::invalid_argument("make_prob_estimate: no samples");
    ProbEstimate e;
    e.k = k;
    e.n = n;
    e.p_hat = static_cast<real>(k) / static_cast<real>(n);
    const auto ci = clopper_pearson(k, n, alpha);
    e.ci_low = ci.low;
    e.ci_high = ci.high;
    e.bound_value = bound;
    e.bound_side = bound ? side : BoundSide::none;
    if (!bound || e.bound_side == BoundSide::none) return e;
    if (e.bound_side == BoundSide::upper) {
        if (e.ci_low > *bound)
            e.status = RecordStatus::bound_violated;
        else if (*bound < clopper_pearson(0, n, alpha).high)
            e.status = RecordStatus::bound_unresolvable;
    } else {
        if (e.ci_high < *bound)
            e.status = RecordStatus::bound_violated;
        else if (*bound > clopper_pearson(n, n, alpha).low)
            e.status = RecordStatus::bound_unresolvable;
    }
    return e;
}

inline std::string to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::ok: return "ok";
        case RecordStatus::bound_violated: return "bound_violated";
        case RecordStatus::bound_unresolvable: return "bound_unresolvable";
    }
    return "unknown";
}

}  // namespace pairloc
