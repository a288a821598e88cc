#ifndef SEG_EVAL_HPP
#define SEG_EVAL_HPP

#include <cstdint>
#include <optional>
#include <span>

#include "seg/corpus.hpp"

namespace seg {

// Per-character confusion counts with Boundary as the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct EvalReport {
    double precision = 0.0;  // tp/(tp+fp), 0 when nothing predicted positive
    double recall = 0.0;     // tp/(tp+fn), 0 when no gold positives
    double f1 = 0.0;         // 2PR/(P+R), 0 when P+R == 0
    ConfusionCounts counts;
    std::optional<int> experiment_id;

    bool operator==(const EvalReport&) const = default;
};

EvalReport report_from_counts(const ConfusionCounts& counts);

// Throws EvalError on a length mismatch.
EvalReport score(std::span<const Label> gold, std::span<const Label> predicted);

}  // namespace seg

#endif  // SEG_EVAL_HPP
