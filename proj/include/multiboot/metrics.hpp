#ifndef MULTIBOOT_METRICS_HPP
#define MULTIBOOT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace multiboot {

namespace detail {

inline double mean(std::span<const double> x) {
    double sum = 0;
    for (double v : x) {
        sum += v;
    }
    return sum / static_cast<double>(x.size());
}

} // namespace detail

/// Sample Pearson correlation. Throws DegenerateVariance if either input is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::LengthMismatch, "pearson inputs differ in length");
    }
    if (a.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "pearson needs at least two values");
    }
    const double ma = detail::mean(a), mb = detail::mean(b);
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0 || sbb == 0) {
        throw Error(ErrorKind::DegenerateVariance, "pearson correlation undefined for a constant input");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/**
 * Whole-column performance value L̂ for one run.
 *
 * - accuracy: fraction of exact prediction/label matches.
 * - mean_of_scores: mean of the predictions; labels are ignored.
 * - pearson: sample correlation between predictions and labels.
 */
inline double evaluate(const MetricSpec& metric, std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
    }
    if (predictions.empty()) {
        throw Error(ErrorKind::InvalidArgument, "metric needs at least one example");
    }
    switch (metric.kind) {
        case MetricKind::accuracy: {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                hits += (predictions[i] == labels[i]);
            }
            return static_cast<double>(hits) / static_cast<double>(predictions.size());
        }
        case MetricKind::mean_of_scores:
            return detail::mean(predictions);
        case MetricKind::pearson:
            return pearson(predictions, labels);
    }
    return 0;
}

/// Accuracy compares class indices, so labels must be integral.
inline void check_metric_compatible(const PredictionSet& preds, const MetricSpec& metric) {
    if (metric.kind != MetricKind::accuracy) {
        return;
    }
    auto labels = preds.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != std::floor(labels[i])) {
            const auto& id = preds.example_ids()[i];
            throw Error(ErrorKind::InvalidLabels, "accuracy needs class-index labels; example '" + id + "' has a fractional label", id);
        }
    }
}

/// Scratch buffers for gathering resampled rows without reallocating.
struct GatherBuffers {
    std::vector<double> predictions;
    std::vector<double> labels;
};

/**
 * Performance of one pretraining seed on the rows `example_indices`
 * (repeats allowed): the metric is evaluated per fine-tuning run and then
 * averaged over that seed's runs.
 */
inline double seed_value(const PredictionSet& preds,
                         const MetricSpec& metric,
                         std::size_t seed,
                         std::span<const std::size_t> example_indices,
                         GatherBuffers& buffers) {
    const std::size_t m = example_indices.size();
    auto labels = preds.labels();
    buffers.labels.resize(m);
    buffers.predictions.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        buffers.labels[k] = labels[example_indices[k]];
    }
    double total = 0;
    for (std::size_t r = preds.seed_begin(seed); r < preds.seed_end(seed); ++r) {
        auto col = preds.column(r);
        for (std::size_t k = 0; k < m; ++k) {
            buffers.predictions[k] = col[example_indices[k]];
        }
        total += evaluate(metric, buffers.predictions, buffers.labels);
    }
    return total / static_cast<double>(preds.runs_in_seed(seed));
}

/// `seed_value` for every pretraining seed, paired with the seed identifier.
inline std::vector<std::pair<std::string, double>> per_seed_values(const PredictionSet& preds,
                                                                   const MetricSpec& metric,
                                                                   std::span<const std::size_t> example_indices) {
    if (example_indices.empty()) {
        throw Error(ErrorKind::InvalidArgument, "example_indices must be nonempty");
    }
    for (std::size_t idx : example_indices) {
        if (idx >= preds.n_examples()) {
            throw Error(ErrorKind::IndexOutOfRange, "example index " + std::to_string(idx) + " out of range", std::to_string(idx));
        }
    }
    GatherBuffers buffers;
    std::vector<std::pair<std::string, double>> output;
    output.reserve(preds.n_seeds());
    for (std::size_t s = 0; s < preds.n_seeds(); ++s) {
        output.emplace_back(preds.seed_ids()[s], seed_value(preds, metric, s, example_indices, buffers));
    }
    return output;
}

inline std::vector<std::size_t> identity_indices(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i;
    }
    return out;
}

} // namespace multiboot

#endif
