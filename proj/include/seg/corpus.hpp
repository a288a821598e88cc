#ifndef SEG_CORPUS_HPP
#define SEG_CORPUS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace seg {

enum class CharClass { Content, Delimiter, Ignorable };

// Per-character boundary supervision. Boundary marks the last character of a
// sentence.
enum class Label : std::uint8_t { NonBoundary = 0, Boundary = 1 };

enum class BoundaryMarks { AllDelimiters, SentenceFinalOnly };

// Character classification config. The default delimiter set covers the
// common marks of punctuated editions; closing quotes and brackets are
// ignorable so a quote closing after a full stop does not create a second
// boundary.
struct CharClassConfig {
    std::unordered_set<char32_t> delimiters;
    std::unordered_set<char32_t> ignorables;
    // Subset of `delimiters` that induces boundaries under SentenceFinalOnly.
    std::unordered_set<char32_t> sentence_final;
    BoundaryMarks boundary_marks = BoundaryMarks::AllDelimiters;

    static CharClassConfig defaults();

    // Throws ConfigError if a character is claimed by more than one set.
    void validate() const;

    bool induces_boundary(char32_t c) const;
};

CharClass classify_char(char32_t c, const CharClassConfig& config);

struct RawDocument {
    std::string id;
    std::u32string text;  // punctuated source text
};

struct Corpus {
    std::string name;
    std::vector<RawDocument> documents;  // order stable across runs
};

// Punctuation-free character sequence with one label per character.
struct LabeledSequence {
    std::string id;  // carried from the source document, for provenance
    std::u32string chars;
    std::vector<Label> labels;

    std::size_t size() const { return chars.size(); }
    bool operator==(const LabeledSequence& o) const {
        return chars == o.chars && labels == o.labels;
    }
};

// Removes delimiters and ignorables; a kept character is Boundary iff at
// least one boundary-inducing delimiter occurs before the next kept
// character. Runs of delimiters collapse to one boundary; leading delimiters
// are dropped.
LabeledSequence strip_and_label(const RawDocument& doc, const CharClassConfig& config);

// One sequence per document, in document order. threads > 1 runs documents in
// parallel; results are merged in document order, so the output is identical
// to the serial path.
std::vector<LabeledSequence> strip_corpus(const Corpus& corpus, const CharClassConfig& config,
                                          int threads = 1);

struct CorpusStats {
    std::uint64_t noc = 0;  // content characters
    std::uint64_t nop = 0;  // delimiter occurrences

    // nop/noc; NaN when the corpus has no content characters.
    double ratio() const;
};

CorpusStats compute_stats(const RawDocument& doc, const CharClassConfig& config);
CorpusStats compute_stats(const Corpus& corpus, const CharClassConfig& config, int threads = 1);

enum class SplitUnit { Document, Sequence };

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 42;
    // Document and Sequence coincide while ingestion maps one document to one
    // sequence; the unit is kept so multi-sequence ingestion can differ.
    SplitUnit unit = SplitUnit::Document;
};

struct SplitResult {
    Corpus train;
    Corpus test;
    // Achieved content-character fraction of the train side, so deviation
    // from the requested fraction is visible.
    double train_char_fraction = 0.0;
    bool train_empty = false;
};

// Seed-deterministic partition: units shuffled by spec.seed, the first
// floor(train_fraction * N) go to train. Throws ConfigError for an empty
// corpus or a fraction outside (0, 1).
SplitResult split(const Corpus& corpus, const SplitSpec& spec, const CharClassConfig& config);

// Labeled-sequence text format: one "char<TAB>label" line per character
// (label B or N), blank line between documents.
std::string to_labeled_tsv(std::span<const LabeledSequence> seqs);
std::vector<LabeledSequence> from_labeled_tsv(std::string_view text,
                                              std::string_view where = "labeled input");

}  // namespace seg

#endif  // SEG_CORPUS_HPP
