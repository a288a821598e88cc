#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "seg/errors.hpp"
#include "seg/eval.hpp"
#include "seg/experiment.hpp"
#include "testutil.hpp"

using namespace seg;

namespace {

std::vector<Label> labels_of(std::string_view s) {
    std::vector<Label> out;
    for (char c : s) out.push_back(c == 'B' ? Label::Boundary : Label::NonBoundary);
    return out;
}

PipelineConfig tiny_pipeline_config() {
    PipelineConfig cfg;
    cfg.split.seed = 3;
    cfg.embedding.dim = 8;
    cfg.embedding.window = 3;
    cfg.embedding.epochs = 3;
    cfg.embedding.seed = 4;
    cfg.model.num_layers = 1;
    cfg.model.layer_output_dim = 16;
    cfg.model.epochs = 5;
    cfg.model.learning_rate = 5e-3;
    cfg.model.batch_size = 32;
    cfg.model.seed = 5;
    cfg.threads = 2;
    return cfg;
}

CorpusRegistry trigger_registry() {
    CorpusRegistry reg;
    // A and A2 share a trigger set; B uses a disjoint one.
    reg.add(testutil::make_trigger_corpus({.name = "A", .num_docs = 24, .doc_len = 160,
                                           .alphabet_size = 24, .trigger_count = 5,
                                           .trigger_offset = 0, .seed = 21}));
    reg.add(testutil::make_trigger_corpus({.name = "B", .num_docs = 24, .doc_len = 160,
                                           .alphabet_size = 24, .trigger_count = 5,
                                           .trigger_offset = 10, .seed = 22}));
    reg.add(testutil::make_trigger_corpus({.name = "A2", .num_docs = 24, .doc_len = 160,
                                           .alphabet_size = 24, .trigger_count = 5,
                                           .trigger_offset = 0, .seed = 23}));
    return reg;
}

}  // namespace

TEST_CASE("score on the worked examples") {
    auto g = labels_of("BNNB");
    auto p = labels_of("BBNN");
    const auto r = score(g, p);
    CHECK(r.counts.tp == 1);
    CHECK(r.counts.fp == 1);
    CHECK(r.counts.fn == 1);
    CHECK(r.counts.tn == 1);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == 0.5);

    const auto perfect = score(g, g);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);

    const auto none = score(g, labels_of("NNNN"));
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);

    CHECK_THROWS_AS(score(g, labels_of("BNN")), EvalError);
}

TEST_CASE("score matches the brute-force tally on random pairs") {
    Rng rng(606);
    for (int i = 0; i < 1000; ++i) {
        const auto n = rng.below(40);
        std::vector<Label> gold, pred;
        for (std::uint64_t k = 0; k < n; ++k) {
            gold.push_back(rng.below(5) == 0 ? Label::Boundary : Label::NonBoundary);
            pred.push_back(rng.below(5) == 0 ? Label::Boundary : Label::NonBoundary);
        }
        const auto oracle = testutil::brute_force_tally(gold, pred);
        const auto got = score(gold, pred);
        REQUIRE(got.counts == oracle);
        CHECK(got.counts.total() == n);
        const auto expect = report_from_counts(oracle);
        CHECK(got.precision == expect.precision);
        CHECK(got.recall == expect.recall);
        CHECK(got.f1 == expect.f1);
        // tp is symmetric under swapping gold and predicted.
        const auto swapped = score(pred, gold);
        CHECK(swapped.recall == got.precision);
        CHECK(swapped.precision == got.recall);
    }
}

TEST_CASE("registry rejects duplicates and unknown names") {
    CorpusRegistry reg;
    reg.add(Corpus{"X", {RawDocument{"d", U"唐。"}}});
    CHECK(reg.has("X"));
    CHECK_THROWS_AS(reg.add(Corpus{"X", {}}), ConfigError);
    CHECK_THROWS_AS(reg.get("Y"), ConfigError);
}

TEST_CASE("run_experiment: in-domain beats cross-domain and isolates the test set") {
    const auto reg = trigger_registry();
    const auto cfg = tiny_pipeline_config();

    ExperimentTrace in_trace;
    const auto in_domain = run_experiment(
        ExperimentSpec{1, {"A", "B", "A2"}, {"A2"}, "A"}, reg, cfg, &in_trace);
    const auto cross = run_experiment(
        ExperimentSpec{2, {"A", "B", "A2"}, {"B"}, "A"}, reg, cfg);

    CHECK(in_domain.f1 > cross.f1);
    CHECK(in_domain.experiment_id == 1);

    // No test-portion document feeds embedding or classifier training.
    for (const auto& docs : {in_trace.embed_docs, in_trace.train_docs})
        for (const auto& id : docs)
            CHECK(std::find(in_trace.test_docs.begin(), in_trace.test_docs.end(), id) ==
                  in_trace.test_docs.end());
    CHECK_FALSE(in_trace.test_docs.empty());
    // Only documents of the test corpus are scored.
    for (const auto& id : in_trace.test_docs) CHECK(id.substr(0, 2) == "A-");
}

TEST_CASE("run_experiment rejects unresolvable names") {
    const auto reg = trigger_registry();
    const auto cfg = tiny_pipeline_config();
    CHECK_THROWS_AS(run_experiment(ExperimentSpec{1, {"nope"}, {"A"}, "A"}, reg, cfg),
                    ConfigError);
    CHECK_THROWS_AS(run_experiment(ExperimentSpec{1, {"A"}, {}, "A"}, reg, cfg), ConfigError);
    CHECK_THROWS_AS(run_experiment(ExperimentSpec{1, {"A"}, {"A"}, "nope"}, reg, cfg),
                    ConfigError);
}

TEST_CASE("run_matrix keeps order, caches, and survives bad rows") {
    const auto reg = trigger_registry();
    auto cfg = tiny_pipeline_config();

    const std::vector<ExperimentSpec> specs{
        {1, {"A"}, {"A"}, "A"},
        {2, {"A"}, {"A"}, "missing"},  // error row
        {3, {"A"}, {"A"}, "A"},        // duplicate of 1: cache hit
        {4, {"A", "B"}, {"B"}, "B"},
        {5, {"B", "A"}, {"B"}, "B"},   // set semantics: same as 4
    };
    const auto result = run_matrix(specs, reg, cfg);
    REQUIRE(result.rows.size() == 5);
    CHECK(result.rows[0].report.has_value());
    CHECK_FALSE(result.rows[1].report.has_value());
    CHECK(result.rows[1].error.find("missing") != std::string::npos);
    REQUIRE(result.rows[2].report.has_value());
    CHECK(result.rows[0].report->f1 == result.rows[2].report->f1);
    CHECK(result.rows[0].report->counts == result.rows[2].report->counts);
    REQUIRE(result.rows[4].report.has_value());
    CHECK(result.rows[3].report->counts == result.rows[4].report->counts);

    // Single spec matches run_experiment.
    const auto lone = run_experiment(specs[0], reg, cfg);
    CHECK(lone.counts == result.rows[0].report->counts);
    CHECK(lone.f1 == result.rows[0].report->f1);

    // Caching never changes results.
    cfg.cache = false;
    const auto uncached = run_matrix(specs, reg, cfg);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(uncached.rows[i].report.has_value() == result.rows[i].report.has_value());
        if (uncached.rows[i].report) {
            CHECK(uncached.rows[i].report->precision == result.rows[i].report->precision);
            CHECK(uncached.rows[i].report->recall == result.rows[i].report->recall);
            CHECK(uncached.rows[i].report->f1 == result.rows[i].report->f1);
            CHECK(uncached.rows[i].report->counts == result.rows[i].report->counts);
        }
    }
}

TEST_CASE("csv export shapes") {
    MatrixResult empty;
    std::ostringstream out;
    export_matrix_csv(empty, out);
    CHECK(out.str() == "id,embed_set,train_set,test,precision,recall,f1\n");

    MatrixResult one;
    MatrixRow row;
    row.spec = {7, {"M", "O"}, {"N"}, "O"};
    EvalReport rep;
    rep.precision = 0.5;
    rep.recall = 0.25;
    rep.f1 = 1.0 / 3.0;
    row.report = rep;
    one.rows.push_back(row);
    out.str("");
    export_matrix_csv(one, out);
    CHECK(out.str() ==
          "id,embed_set,train_set,test,precision,recall,f1\n"
          "7,M+O,N,O,0.5000,0.2500,0.3333\n");

    // Error rows keep the column count with empty numeric fields.
    one.rows[0].report.reset();
    one.rows[0].error = "boom";
    out.str("");
    export_matrix_csv(one, out);
    CHECK(out.str().find("7,M+O,N,O,,,\n") != std::string::npos);
}

TEST_CASE("matrix json export/import round trip") {
    const auto reg = trigger_registry();
    const auto cfg = tiny_pipeline_config();
    const std::vector<ExperimentSpec> specs{
        {1, {"A"}, {"A"}, "A"},
        {2, {"A"}, {"A"}, "missing"},
    };
    const auto result = run_matrix(specs, reg, cfg);

    std::ostringstream out;
    export_matrix_json(result, out);
    std::istringstream in(out.str());
    const auto back = import_matrix_json(in);

    REQUIRE(back.rows.size() == result.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].spec.id == result.rows[i].spec.id);
        CHECK(back.rows[i].spec.embed_set == result.rows[i].spec.embed_set);
        CHECK(back.rows[i].spec.train_set == result.rows[i].spec.train_set);
        CHECK(back.rows[i].spec.test == result.rows[i].spec.test);
        CHECK(back.rows[i].error == result.rows[i].error);
        REQUIRE(back.rows[i].report.has_value() == result.rows[i].report.has_value());
        if (back.rows[i].report) CHECK(*back.rows[i].report == *result.rows[i].report);
    }
    CHECK(back.provenance.started_at == result.provenance.started_at);
    CHECK(back.provenance.finished_at == result.provenance.finished_at);
    CHECK(back.provenance.config_echo == result.provenance.config_echo);

    // Re-export reproduces the bytes.
    std::ostringstream out2;
    export_matrix_json(back, out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("bundled table2 manifest loads with 24 rows") {
    // The manifest ships with the repository; tests run from anywhere, so
    // resolve it relative to this source file's tree via SEG_DATA_DIR.
    const std::filesystem::path path = std::filesystem::path(SEG_DATA_DIR) / "table2.json";
    const auto specs = load_manifest(path);
    REQUIRE(specs.size() == 24);
    CHECK(specs[0].id == 1);
    CHECK(specs[0].embed_set == std::vector<std::string>{"MZM"});
    CHECK(specs[0].train_set == std::vector<std::string>{"MZM"});
    CHECK(specs[0].test == "MZM");
    // Rows 31+ embed all three corpora.
    const auto& row31 = *std::find_if(specs.begin(), specs.end(),
                                      [](const auto& s) { return s.id == 31; });
    CHECK(row31.embed_set == std::vector<std::string>{"MZM", "OTB", "NTB"});
    const auto& row44 = *std::find_if(specs.begin(), specs.end(),
                                      [](const auto& s) { return s.id == 44; });
    CHECK(row44.train_set == std::vector<std::string>{"MZM"});
    CHECK(row44.test == "OTB");
    // Every test corpus name resolves to one of the three.
    for (const auto& s : specs) {
        CHECK((s.test == "MZM" || s.test == "OTB" || s.test == "NTB"));
        CHECK_FALSE(s.embed_set.empty());
        CHECK_FALSE(s.train_set.empty());
    }
}
