#ifndef MULTIBOOT_AGREEMENT_HPP
#define MULTIBOOT_AGREEMENT_HPP

#include <cstddef>
#include <span>
#include <string_view>

#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace multiboot {

enum class TaskKind { classification, regression };

inline constexpr std::string_view to_string(TaskKind kind) {
    return kind == TaskKind::classification ? "classification" : "regression";
}

struct AgreementReport {
    double same_seed_mean = 0;
    double diff_seed_mean = 0;
    double gap = 0;
    std::size_t n_same_pairs = 0;
    std::size_t n_diff_pairs = 0;
    TaskKind task_kind = TaskKind::classification;
};

/// Exact-match rate (classification) or Pearson correlation (regression) between two runs.
inline double pair_agreement(std::span<const double> a, std::span<const double> b, TaskKind kind) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::LengthMismatch, "agreement inputs differ in length");
    }
    if (a.empty()) {
        throw Error(ErrorKind::InvalidArgument, "agreement needs at least one example");
    }
    if (kind == TaskKind::regression) {
        return pearson(a, b);
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same += (a[i] == b[i]);
    }
    return static_cast<double>(same) / static_cast<double>(a.size());
}

/**
 * Mean agreement over all unordered run pairs, split into pairs that share
 * a pretraining seed and pairs that do not. A run is never paired with
 * itself.
 */
inline AgreementReport agreement_matrix(const PredictionSet& preds, TaskKind kind) {
    AgreementReport report;
    report.task_kind = kind;

    std::vector<std::size_t> seed_of(preds.n_runs());
    for (std::size_t s = 0; s < preds.n_seeds(); ++s) {
        for (std::size_t r = preds.seed_begin(s); r < preds.seed_end(s); ++r) {
            seed_of[r] = s;
        }
    }
    for (std::size_t s = 0; s < preds.n_seeds(); ++s) {
        const std::size_t k = preds.runs_in_seed(s);
        report.n_same_pairs += k * (k - 1) / 2;
    }
    const std::size_t all_pairs = preds.n_runs() * (preds.n_runs() - 1) / 2;
    report.n_diff_pairs = all_pairs - report.n_same_pairs;

    if (report.n_same_pairs == 0) {
        throw Error(ErrorKind::InsufficientRuns, "no pretraining seed has two or more fine-tuning runs", "same");
    }
    if (report.n_diff_pairs == 0) {
        throw Error(ErrorKind::InsufficientRuns, "at least two pretraining seeds are needed", "diff");
    }

    double same_total = 0, diff_total = 0;
    for (std::size_t r1 = 0; r1 < preds.n_runs(); ++r1) {
        for (std::size_t r2 = r1 + 1; r2 < preds.n_runs(); ++r2) {
            double value = pair_agreement(preds.column(r1), preds.column(r2), kind);
            (seed_of[r1] == seed_of[r2] ? same_total : diff_total) += value;
        }
    }
    report.same_seed_mean = same_total / static_cast<double>(report.n_same_pairs);
    report.diff_seed_mean = diff_total / static_cast<double>(report.n_diff_pairs);
    report.gap = report.same_seed_mean - report.diff_seed_mean;
    return report;
}

} // namespace multiboot

#endif
