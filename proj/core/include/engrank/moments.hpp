#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

namespace engrank {

// One-pass accumulation of the first four central moments (Welford/Pebay
// updating formulas). The descriptive-stats oracle in the tests recomputes
// everything by direct two-pass summation, so the two routes stay
// independent.
class RunningMoments {
public:
    void push(double x) noexcept {
        const double n1 = static_cast<double>(n_);
        n_ += 1;
        const double n = static_cast<double>(n_);
        const double delta = x - mean_;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        mean_ += delta_n;
        m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
               4.0 * delta_n * m3_;
        m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
        m2_ += term1;
    }

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }

    // central sums: m2 = sum (x - mean)^2, etc.
    double m2() const noexcept { return m2_; }
    double m3() const noexcept { return m3_; }
    double m4() const noexcept { return m4_; }

    // n-1 denominator; 0 when fewer than two samples
    double sample_std() const noexcept {
        if (n_ < 2) return 0.0;
        return std::sqrt(m2_ / static_cast<double>(n_ - 1));
    }

    // bias-adjusted sample skewness G1; undefined for n < 3 or a constant sample
    std::optional<double> sample_skewness() const noexcept {
        if (n_ < 3 || m2_ <= 0.0) return std::nullopt;
        const double n = static_cast<double>(n_);
        const double g1 = (m3_ / n) / std::pow(m2_ / n, 1.5);
        return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
    }

    // bias-adjusted sample excess kurtosis G2; undefined for n < 4 or a constant sample
    std::optional<double> sample_excess_kurtosis() const noexcept {
        if (n_ < 4 || m2_ <= 0.0) return std::nullopt;
        const double n = static_cast<double>(n_);
        const double g2 = (m4_ / n) / ((m2_ / n) * (m2_ / n)) - 3.0;
        return ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

}  // namespace engrank
