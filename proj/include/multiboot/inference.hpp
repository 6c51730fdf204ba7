#ifndef MULTIBOOT_INFERENCE_HPP
#define MULTIBOOT_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace multiboot {

struct Interval {
    double lower = 0;
    double upper = 0;
};

namespace detail {

/// Quantile of sorted data by linear interpolation at h = (n - 1) p.
inline double sorted_quantile(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) {
        return sorted[0];
    }
    const double h = static_cast<double>(n - 1) * p;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) {
        return sorted[n - 1];
    }
    const double frac = h - static_cast<double>(lo);
    const double a = sorted[lo], b = sorted[lo + 1];
    // Clamp so rounding never steps outside the bracketing order statistics;
    // keeps the quantile monotone in p.
    return std::clamp(a + frac * (b - a), a, b);
}

inline std::vector<double> sorted_copy(std::span<const double> samples) {
    std::vector<double> out(samples.begin(), samples.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/**
 * Percentile confidence interval: the empirical quantiles at (1 − level)/2
 * and (1 + level)/2.
 */
inline Interval percentile_ci(std::span<const double> samples, double level) {
    if (samples.empty()) {
        throw Error(ErrorKind::EmptySamples, "cannot form an interval from zero samples");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "confidence level must lie strictly between 0 and 1");
    }
    auto sorted = detail::sorted_copy(samples);
    return Interval{detail::sorted_quantile(sorted, (1.0 - level) / 2.0),
                    detail::sorted_quantile(sorted, (1.0 + level) / 2.0)};
}

inline std::size_t count_at_most(std::span<const double> samples, double threshold) {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [&](double v) { return v <= threshold; }));
}

/// One-sided p-value for H0: δ ≤ 0, i.e. the fraction of δ̂* draws that are ≤ 0.
inline double p_value_leq_zero(std::span<const double> delta_samples) {
    if (delta_samples.empty()) {
        throw Error(ErrorKind::EmptySamples, "cannot compute a p-value from zero samples");
    }
    return static_cast<double>(count_at_most(delta_samples, 0.0)) / static_cast<double>(delta_samples.size());
}

struct BaselineComparison {
    /// Fraction of θ̂* draws at or below the baseline (test of H0: θ ≤ baseline).
    double p_value = 0;
    /// Empirical CDF of the θ̂* draws evaluated at the baseline.
    double placement = 0;
};

inline BaselineComparison baseline_comparison(std::span<const double> samples, double baseline) {
    if (samples.empty()) {
        throw Error(ErrorKind::EmptySamples, "cannot compare a baseline against zero samples");
    }
    if (!std::isfinite(baseline)) {
        throw Error(ErrorKind::NonFiniteValue, "baseline must be finite");
    }
    double frac = static_cast<double>(count_at_most(samples, baseline)) / static_cast<double>(samples.size());
    return BaselineComparison{frac, frac};
}

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

/**
 * Freedman–Diaconis histogram. Bin width is 2·IQR·n^(-1/3); the bin count is
 * clamped to [1, n] and the edges span exactly [min, max]. The last bin is
 * closed on the right.
 */
inline Histogram histogram(std::span<const double> samples) {
    if (samples.empty()) {
        throw Error(ErrorKind::EmptySamples, "cannot bin zero samples");
    }
    auto sorted = detail::sorted_copy(samples);
    const double lo = sorted.front(), hi = sorted.back();
    const double range = hi - lo;
    const double n = static_cast<double>(sorted.size());
    const double iqr = detail::sorted_quantile(sorted, 0.75) - detail::sorted_quantile(sorted, 0.25);
    const double width = 2.0 * iqr / std::cbrt(n);

    std::size_t bins = 1;
    if (range > 0 && width > 0) {
        double wanted = std::ceil(range / width);
        bins = static_cast<std::size_t>(std::clamp(wanted, 1.0, n));
    }

    Histogram out;
    out.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        out.edges[k] = lo + range * static_cast<double>(k) / static_cast<double>(bins);
    }
    out.edges.back() = hi;
    out.counts.assign(bins, 0);
    for (double v : sorted) {
        auto it = std::upper_bound(out.edges.begin() + 1, out.edges.end() - 1, v);
        ++out.counts[static_cast<std::size_t>(it - (out.edges.begin() + 1))];
    }
    return out;
}

struct ArmSummary {
    double theta = 0;
    std::optional<Interval> ci;
};

/**
 * Summary of one analysis. Comparison designs fill the θ_base /
 * θ_intervention / δ triplet and the p-value; the single design leaves them
 * empty. For every comparison `delta == theta_intervention - theta_base`
 * bit for bit.
 */
struct ComparisonReport {
    DesignSpec design;
    MetricSpec metric;
    double point_estimate = 0;
    std::optional<double> theta_base;
    std::optional<double> theta_intervention;
    std::optional<double> delta;
    Interval ci;
    std::optional<double> p_value;
    std::optional<std::size_t> ties_at_zero;
    std::optional<double> baseline_placement;
    std::optional<ArmSummary> base_arm;
    std::optional<ArmSummary> intervention_arm;
    std::size_t nboot = 0;
    double samples_mean = 0;
    double samples_sd = 0;
    Histogram histogram;
    std::vector<std::string> warnings;
};

/**
 * Build a report from a point estimate and its bootstrap draws.
 *
 * For paired/unpaired designs `samples` are δ̂* and `per_arm` carries the
 * (base, intervention) θ̂ and θ̂* vectors. For the fixed-baseline design
 * `samples` are θ̂* − baseline and `per_arm->second` holds the model's θ̂*.
 */
inline ComparisonReport summarize(double point,
                                  std::span<const double> samples,
                                  const DesignSpec& design,
                                  const MetricSpec& metric,
                                  const std::optional<std::pair<ArmResult, ArmResult>>& per_arm = std::nullopt) {
    if (samples.empty()) {
        throw Error(ErrorKind::EmptySamples, "cannot summarize zero samples");
    }
    ComparisonReport report;
    report.design = design;
    report.metric = metric;
    report.nboot = samples.size();
    report.ci = percentile_ci(samples, design.ci_level);
    report.histogram = histogram(samples);

    double sum = 0;
    for (double v : samples) {
        sum += v;
    }
    report.samples_mean = sum / static_cast<double>(samples.size());
    double ss = 0;
    for (double v : samples) {
        ss += (v - report.samples_mean) * (v - report.samples_mean);
    }
    report.samples_sd = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : 0.0;

    auto arm_summary = [&](const ArmResult& arm) {
        ArmSummary out{arm.point_estimate, std::nullopt};
        if (!arm.samples.empty()) {
            out.ci = percentile_ci(arm.samples, design.ci_level);
        }
        return out;
    };

    report.point_estimate = point;
    if (!design.tests_hypothesis()) {
        return report;
    }

    if (per_arm) {
        report.base_arm = arm_summary(per_arm->first);
        report.intervention_arm = arm_summary(per_arm->second);
        report.theta_base = per_arm->first.point_estimate;
        report.theta_intervention = per_arm->second.point_estimate;
        report.delta = *report.theta_intervention - *report.theta_base;
        report.point_estimate = *report.delta;
    } else {
        report.delta = point;
    }

    report.ties_at_zero = std::count(samples.begin(), samples.end(), 0.0);
    if (design.design == Design::fixed_baseline && per_arm && !per_arm->second.samples.empty()) {
        auto cmp = baseline_comparison(per_arm->second.samples, *design.baseline_value);
        report.p_value = cmp.p_value;
        report.baseline_placement = cmp.placement;
    } else {
        report.p_value = p_value_leq_zero(samples);
    }
    return report;
}

} // namespace multiboot

#endif
