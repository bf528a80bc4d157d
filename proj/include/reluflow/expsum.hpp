#pragma once

#include "reluflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace reluflow {

/// f(t) = constant + sum_k coef_k * exp(-rate_k * t), rates > 0.
class ExpSum {
public:
    ExpSum() = default;

    /// Rates closer than 1e-12 relative are merged; zero-rate terms join the
    /// constant; terms negligible against the total magnitude are dropped.
    ExpSum(double constant, const std::vector<double>& rates, const std::vector<double>& coefs)
        : constant_(constant) {
        std::vector<std::pair<double, double>> terms;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            if (rates[k] <= 0.0) {
                constant_ += coefs[k];
            } else if (coefs[k] != 0.0) {
                terms.emplace_back(rates[k], coefs[k]);
            }
        }
        std::sort(terms.begin(), terms.end());
        for (const auto& [r, c] : terms) {
            if (!rates_.empty() && r - rates_.back() <= 1e-12 * r) {
                coefs_.back() += c;
            } else {
                rates_.push_back(r);
                coefs_.push_back(c);
            }
        }
        double mag = std::abs(constant_);
        for (double c : coefs_) mag = std::max(mag, std::abs(c));
        std::vector<double> r2, c2;
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            if (std::abs(coefs_[k]) > 1e-14 * mag) {
                r2.push_back(rates_[k]);
                c2.push_back(coefs_[k]);
            }
        }
        rates_ = std::move(r2);
        coefs_ = std::move(c2);
    }

    double constant() const { return constant_; }
    const std::vector<double>& rates() const { return rates_; }
    const std::vector<double>& coefs() const { return coefs_; }
    std::size_t terms() const { return rates_.size(); }

    double operator()(double t) const { return derivative(t, 0); }

    /// m-th derivative.
    double derivative(double t, int m) const {
        double s = m == 0 ? constant_ : 0.0;
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            s += coefs_[k] * std::pow(-rates_[k], m) * std::exp(-rates_[k] * t);
        }
        return s;
    }

    /// Sum of term magnitudes of the m-th derivative, used as a zero scale.
    double magnitude(double t, int m) const {
        double s = m == 0 ? std::abs(constant_) : 0.0;
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            s += std::abs(coefs_[k]) * std::pow(rates_[k], m) * std::exp(-rates_[k] * t);
        }
        return s;
    }

    double limit() const { return constant_; }

    double max_rate() const { return rates_.empty() ? 0.0 : rates_.back(); }

    /// Derivative multiplied by exp(slowest rate * t): one term becomes the
    /// constant, so the result has one term fewer and the same zeros.
    ExpSum reduced_derivative() const {
        ExpSum out;
        if (rates_.empty()) return out;
        const double r0 = rates_.front();
        out.constant_ = -r0 * coefs_.front();
        for (std::size_t k = 1; k < rates_.size(); ++k) {
            out.rates_.push_back(rates_[k] - r0);
            out.coefs_.push_back(-rates_[k] * coefs_[k]);
        }
        return out;
    }

private:
    double constant_ = 0.0;
    std::vector<double> rates_;
    std::vector<double> coefs_;
};

struct RootOptions {
    double zero_tol = 0.0;  // |f| below this counts as zero
    double first_step = 0.0;  // tail bracket start; default 1e-6 / max rate
    double factor = 2.0;      // tail bracket growth
};

/// Sign just right of t (direction +1) or just left (direction -1), using
/// the first derivative that is not negligible when f(t) itself is.
inline int side_sign(const ExpSum& f, double t, int direction, double zero_tol) {
    const double v = f(t);
    if (std::abs(v) > zero_tol) return v > 0 ? 1 : -1;
    const int order = static_cast<int>(f.terms()) + 1;
    for (int m = 1; m <= order; ++m) {
        const double dm = f.derivative(t, m);
        if (std::abs(dm) <= 1e-13 * f.magnitude(t, m)) continue;
        int s = dm > 0 ? 1 : -1;
        if (direction < 0 && (m % 2 == 1)) s = -s;
        return s;
    }
    return 0;
}

namespace detail {

inline double bisect(const ExpSum& f, double a, double b, int sa) {
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b)) break;
        const double v = f(mid);
        const int sm = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (sm == 0) return mid;
        if (sm == sa) {
            a = mid;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

// Zeros of f strictly inside (lo, hi) where f changes sign; hi may be +inf.
inline void sign_change_roots(const ExpSum& f, double lo, double hi, const RootOptions& opt,
                              std::vector<double>& out) {
    if (f.terms() == 0) return;
    std::vector<double> crit;
    {
        RootOptions sub = opt;
        sub.zero_tol = 0.0;
        sign_change_roots(f.reduced_derivative(), lo, hi, sub, crit);
    }
    std::vector<double> knots;
    knots.push_back(lo);
    for (double c : crit) {
        if (c > lo && c < hi) knots.push_back(c);
    }
    const bool infinite = std::isinf(hi);
    if (!infinite) knots.push_back(hi);

    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k], b = knots[k + 1];
        const int sa = side_sign(f, a, +1, opt.zero_tol);
        const int sb = side_sign(f, b, -1, opt.zero_tol);
        if (sa != 0 && sb != 0 && sa != sb) out.push_back(bisect(f, a, b, sa));
        // A sign change exactly at an interior knot.
        if (k + 1 < knots.size() - 1 || infinite) {
            const int left = sb;
            const int right = side_sign(f, b, +1, opt.zero_tol);
            if (b < hi && left != 0 && right != 0 && left != right && std::abs(f(b)) <= opt.zero_tol) {
                out.push_back(b);
            }
        }
    }
    if (infinite) {
        const double a = knots.back();
        const int sa = side_sign(f, a, +1, opt.zero_tol);
        const double lim = f.limit();
        const int sl = std::abs(lim) <= opt.zero_tol ? 0 : (lim > 0 ? 1 : -1);
        if (sa != 0 && sl != 0 && sa != sl) {
            double step = opt.first_step > 0.0 ? opt.first_step : 1e-6 / f.max_rate();
            double b = a + step;
            for (int it = 0; it < 4000; ++it) {
                const double v = f(b);
                if (v != 0.0 && (v > 0 ? 1 : -1) == sl) break;
                if (v == 0.0) break;
                step *= opt.factor;
                b = a + step;
            }
            out.push_back(bisect(f, a, b, sa));
        }
    }
    std::sort(out.begin(), out.end());
}

}  // namespace detail

/// Sign-changing zeros of f in (lo, hi), increasing. hi may be +infinity.
/// Zeros are isolated by recursion on the derivative: between consecutive
/// critical points f is monotone, and the tail past the last critical point
/// is bracketed by step doubling towards the limit.
inline std::vector<double> expsum_roots(const ExpSum& f, double lo, double hi,
                                        const RootOptions& opt = {}) {
    std::vector<double> out;
    if (!(hi > lo)) return out;
    detail::sign_change_roots(f, lo, hi, opt, out);
    std::vector<double> uniq;
    for (double r : out) {
        if (r <= lo || r >= hi) continue;
        if (uniq.empty() || r > uniq.back()) uniq.push_back(r);
    }
    return uniq;
}

}  // namespace reluflow
