#include "seg/config_json.hpp"

#include "seg/corpus.hpp"
#include "seg/embedding.hpp"
#include "seg/errors.hpp"
#include "seg/model.hpp"
#include "seg/utf8.hpp"

namespace seg {

namespace {

std::string set_to_string(const std::unordered_set<char32_t>& set) {
    // Sorted so the echo is deterministic.
    std::u32string chars(set.begin(), set.end());
    std::sort(chars.begin(), chars.end());
    return utf8::encode(chars);
}

std::unordered_set<char32_t> set_from_string(const std::string& s) {
    const std::u32string chars = utf8::decode(s, "config");
    return {chars.begin(), chars.end()};
}

template <class T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json chars_to_json(const CharClassConfig& c) {
    return {
        {"delimiters", set_to_string(c.delimiters)},
        {"ignorables", set_to_string(c.ignorables)},
        {"sentence_final", set_to_string(c.sentence_final)},
        {"boundary_marks",
         c.boundary_marks == BoundaryMarks::AllDelimiters ? "all" : "sentence_final"},
    };
}

CharClassConfig chars_from_json(const nlohmann::json& j) {
    CharClassConfig c = CharClassConfig::defaults();
    if (j.contains("delimiters")) c.delimiters = set_from_string(j.at("delimiters"));
    if (j.contains("ignorables")) c.ignorables = set_from_string(j.at("ignorables"));
    if (j.contains("sentence_final")) c.sentence_final = set_from_string(j.at("sentence_final"));
    if (j.contains("extra_delimiters"))
        for (char32_t ch : utf8::decode(j.at("extra_delimiters").get<std::string>(), "config"))
            c.delimiters.insert(ch);
    if (j.contains("boundary_marks")) {
        const std::string mode = j.at("boundary_marks").get<std::string>();
        if (mode == "all")
            c.boundary_marks = BoundaryMarks::AllDelimiters;
        else if (mode == "sentence_final")
            c.boundary_marks = BoundaryMarks::SentenceFinalOnly;
        else
            throw ConfigError("boundary_marks must be \"all\" or \"sentence_final\"");
    }
    c.validate();
    return c;
}

nlohmann::json split_to_json(const SplitSpec& s) {
    return {
        {"train_fraction", s.train_fraction},
        {"seed", s.seed},
        {"unit", s.unit == SplitUnit::Document ? "document" : "sequence"},
    };
}

SplitSpec split_from_json(const nlohmann::json& j) {
    SplitSpec s;
    maybe(j, "train_fraction", s.train_fraction);
    maybe(j, "seed", s.seed);
    if (j.contains("unit")) {
        const std::string unit = j.at("unit").get<std::string>();
        if (unit == "document")
            s.unit = SplitUnit::Document;
        else if (unit == "sequence")
            s.unit = SplitUnit::Sequence;
        else
            throw ConfigError("split unit must be \"document\" or \"sequence\"");
    }
    return s;
}

nlohmann::json embedding_to_json(const EmbeddingConfig& c) {
    return {
        {"dim", c.dim},
        {"window", c.window},
        {"min_count", c.min_count},
        {"iter", c.epochs},
        {"batch_words", c.batch_words},
        {"negatives", c.negatives},
        {"alpha", c.alpha},
        {"min_alpha_factor", c.min_alpha_factor},
        {"subsample", c.subsample},
        {"seed", c.seed},
    };
}

EmbeddingConfig embedding_from_json(const nlohmann::json& j) {
    EmbeddingConfig c;
    maybe(j, "dim", c.dim);
    maybe(j, "window", c.window);
    maybe(j, "min_count", c.min_count);
    maybe(j, "iter", c.epochs);
    maybe(j, "batch_words", c.batch_words);
    maybe(j, "negatives", c.negatives);
    maybe(j, "alpha", c.alpha);
    maybe(j, "min_alpha_factor", c.min_alpha_factor);
    maybe(j, "subsample", c.subsample);
    maybe(j, "seed", c.seed);
    c.validate();
    return c;
}

nlohmann::json model_to_json(const ModelConfig& c) {
    return {
        {"layers", c.num_layers},
        {"output_dim", c.layer_output_dim},
        {"context", c.context_len},
        {"context_offset", c.context_offset},
        {"num_classes", c.num_classes},
        {"input_dim", c.input_dim},
        {"learning_rate", c.learning_rate},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"epsilon", c.epsilon},
        {"batch_size", c.batch_size},
        {"epochs", c.epochs},
        {"seed", c.seed},
        {"head_at_last_step", c.head_at_last_step},
    };
}

ModelConfig model_from_json(const nlohmann::json& j) {
    ModelConfig c;
    maybe(j, "layers", c.num_layers);
    maybe(j, "output_dim", c.layer_output_dim);
    maybe(j, "context", c.context_len);
    maybe(j, "context_offset", c.context_offset);
    maybe(j, "num_classes", c.num_classes);
    maybe(j, "input_dim", c.input_dim);
    maybe(j, "learning_rate", c.learning_rate);
    maybe(j, "beta1", c.beta1);
    maybe(j, "beta2", c.beta2);
    maybe(j, "epsilon", c.epsilon);
    maybe(j, "batch_size", c.batch_size);
    maybe(j, "epochs", c.epochs);
    maybe(j, "seed", c.seed);
    maybe(j, "head_at_last_step", c.head_at_last_step);
    return c;
}

}  // namespace seg
