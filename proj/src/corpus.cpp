#include "seg/corpus.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "seg/errors.hpp"
#include "seg/rng.hpp"
#include "seg/utf8.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace seg {

namespace {

std::unordered_set<char32_t> set_of(std::u32string_view chars) {
    return {chars.begin(), chars.end()};
}

}  // namespace

CharClassConfig CharClassConfig::defaults() {
    CharClassConfig c;
    c.delimiters = set_of(U"。，、；：？！");
    c.sentence_final = set_of(U"。？！");
    c.ignorables = set_of(U"「」『』（）《》〈〉【】〔〕・");
    for (char32_t ws : {U' ', U'\t', U'\n', U'\r', U'\v', U'\f',
                        char32_t{0x3000} /* ideographic space */,
                        char32_t{0xFEFF} /* BOM */}) {
        c.ignorables.insert(ws);
    }
    return c;
}

void CharClassConfig::validate() const {
    for (char32_t c : delimiters) {
        if (ignorables.count(c)) {
            std::string repr;
            utf8::append(repr, c);
            throw ConfigError("character '" + repr + "' is both delimiter and ignorable");
        }
    }
    for (char32_t c : sentence_final) {
        if (!delimiters.count(c)) {
            std::string repr;
            utf8::append(repr, c);
            throw ConfigError("sentence-final mark '" + repr + "' is not in the delimiter set");
        }
    }
}

bool CharClassConfig::induces_boundary(char32_t c) const {
    if (!delimiters.count(c)) return false;
    if (boundary_marks == BoundaryMarks::AllDelimiters) return true;
    return sentence_final.count(c) > 0;
}

CharClass classify_char(char32_t c, const CharClassConfig& config) {
    if (config.delimiters.count(c)) return CharClass::Delimiter;
    if (config.ignorables.count(c)) return CharClass::Ignorable;
    return CharClass::Content;
}

LabeledSequence strip_and_label(const RawDocument& doc, const CharClassConfig& config) {
    LabeledSequence seq;
    seq.id = doc.id;
    seq.chars.reserve(doc.text.size());
    for (char32_t c : doc.text) {
        switch (classify_char(c, config)) {
            case CharClass::Content:
                seq.chars.push_back(c);
                seq.labels.push_back(Label::NonBoundary);
                break;
            case CharClass::Delimiter:
                // Marks the preceding kept character; a delimiter run keeps
                // re-marking the same position, which collapses it to one
                // boundary. Leading delimiters have nothing to mark.
                if (config.induces_boundary(c) && !seq.labels.empty())
                    seq.labels.back() = Label::Boundary;
                break;
            case CharClass::Ignorable:
                break;
        }
    }
    return seq;
}

std::vector<LabeledSequence> strip_corpus(const Corpus& corpus, const CharClassConfig& config,
                                          int threads) {
    std::vector<LabeledSequence> out(corpus.documents.size());
    const auto n = static_cast<std::int64_t>(corpus.documents.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1) if (threads > 1)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            strip_and_label(corpus.documents[static_cast<std::size_t>(i)], config);
    }
    return out;
}

double CorpusStats::ratio() const {
    if (noc == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(nop) / static_cast<double>(noc);
}

CorpusStats compute_stats(const RawDocument& doc, const CharClassConfig& config) {
    CorpusStats s;
    for (char32_t c : doc.text) {
        switch (classify_char(c, config)) {
            case CharClass::Content: ++s.noc; break;
            case CharClass::Delimiter: ++s.nop; break;
            case CharClass::Ignorable: break;
        }
    }
    return s;
}

CorpusStats compute_stats(const Corpus& corpus, const CharClassConfig& config, int threads) {
    CorpusStats total;
    const auto n = static_cast<std::int64_t>(corpus.documents.size());
    std::uint64_t noc = 0, nop = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : noc, nop) \
    num_threads(threads > 0 ? threads : 1) if (threads > 1)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        CorpusStats s = compute_stats(corpus.documents[static_cast<std::size_t>(i)], config);
        noc += s.noc;
        nop += s.nop;
    }
    total.noc = noc;
    total.nop = nop;
    return total;
}

SplitResult split(const Corpus& corpus, const SplitSpec& spec, const CharClassConfig& config) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1), got " +
                          std::to_string(spec.train_fraction));
    if (corpus.documents.empty())
        throw ConfigError("cannot split empty corpus '" + corpus.name + "'");

    const std::size_t n = corpus.documents.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n)));

    SplitResult res;
    res.train.name = corpus.name;
    res.test.name = corpus.name;
    std::uint64_t train_chars = 0, total_chars = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const RawDocument& doc = corpus.documents[order[k]];
        const std::uint64_t chars = compute_stats(doc, config).noc;
        total_chars += chars;
        if (k < n_train) {
            res.train.documents.push_back(doc);
            train_chars += chars;
        } else {
            res.test.documents.push_back(doc);
        }
    }
    res.train_char_fraction =
        total_chars == 0 ? 0.0
                         : static_cast<double>(train_chars) / static_cast<double>(total_chars);
    res.train_empty = res.train.documents.empty();
    return res;
}

std::string to_labeled_tsv(std::span<const LabeledSequence> seqs) {
    std::string out;
    bool first = true;
    for (const LabeledSequence& seq : seqs) {
        if (!first) out.push_back('\n');
        first = false;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            utf8::append(out, seq.chars[i]);
            out.push_back('\t');
            out.push_back(seq.labels[i] == Label::Boundary ? 'B' : 'N');
            out.push_back('\n');
        }
    }
    return out;
}

std::vector<LabeledSequence> from_labeled_tsv(std::string_view text, std::string_view where) {
    std::vector<LabeledSequence> seqs;
    LabeledSequence cur;
    bool cur_open = false;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        ++lineno;
        if (line.empty()) {
            if (cur_open) {
                seqs.push_back(std::move(cur));
                cur = LabeledSequence{};
                cur_open = false;
            }
        } else {
            const std::size_t tab = line.find('\t');
            if (tab == std::string_view::npos)
                throw IoError(std::string(where) + ": line " + std::to_string(lineno) +
                              ": expected char<TAB>label");
            const std::u32string ch = utf8::decode(line.substr(0, tab), where);
            std::string_view lab = line.substr(tab + 1);
            if (ch.size() != 1 || (lab != "B" && lab != "N"))
                throw IoError(std::string(where) + ": line " + std::to_string(lineno) +
                              ": expected one character and label B or N");
            cur.chars.push_back(ch[0]);
            cur.labels.push_back(lab == "B" ? Label::Boundary : Label::NonBoundary);
            cur_open = true;
        }
        if (eol == text.size()) break;
        pos = eol + 1;
    }
    if (cur_open) seqs.push_back(std::move(cur));
    return seqs;
}

}  // namespace seg
