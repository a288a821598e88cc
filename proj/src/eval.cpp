#include "seg/eval.hpp"

#include <string>

#include "seg/errors.hpp"

namespace seg {

EvalReport report_from_counts(const ConfusionCounts& counts) {
    EvalReport r;
    r.counts = counts;
    const auto tp = static_cast<double>(counts.tp);
    if (counts.tp + counts.fp > 0) r.precision = tp / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0) r.recall = tp / static_cast<double>(counts.tp + counts.fn);
    if (r.precision + r.recall > 0.0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

EvalReport score(std::span<const Label> gold, std::span<const Label> predicted) {
    if (gold.size() != predicted.size())
        throw EvalError("length mismatch: gold has " + std::to_string(gold.size()) +
                        " labels, predicted has " + std::to_string(predicted.size()));
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] == Label::Boundary;
        const bool p = predicted[i] == Label::Boundary;
        if (g && p)
            ++c.tp;
        else if (!g && p)
            ++c.fp;
        else if (g && !p)
            ++c.fn;
        else
            ++c.tn;
    }
    return report_from_counts(c);
}

}  // namespace seg
