#include <doctest.h>

#include <algorithm>

#include "sce/metrics.hpp"
#include "sce/rng.hpp"
#include "support/oracles.hpp"
#include "support/sst_fixture.hpp"

using namespace sce;

namespace {

// minimal record shaping for the fold tests
RunRecord make_record(const std::string& id, int trial, bool parseable, bool kept,
                      bool valid_without, bool valid_with, const std::string& source = "abcd",
                      const std::string& sce = "abcd") {
    RunRecord r;
    r.example_id = id;
    r.trial = trial;
    r.sce_source = source;
    Conversation conv;
    conv.push_user("prompt " + id);
    ParsedAnswer parsed;
    parsed.raw = "raw";
    if (parseable) {
        parsed.kind = ParsedAnswer::Kind::label;
        parsed.label = "Positive";
    }
    r.step1 = StepTrace{conv, "raw", parsed};
    if (!parseable) return r;
    r.target = TargetLabel{PredictionValue(std::string("Negative")),
                           PredictionValue(std::string("Positive"))};
    Conversation conv2 = conv;
    conv2.push_assistant("raw");
    conv2.push_user("sce request");
    FilterOutcome filter = kept ? FilterOutcome{true, FilterOutcome::Reason::ok}
                                : FilterOutcome{false, FilterOutcome::Reason::too_short};
    r.step2 = SceTrace{conv2, "raw2", sce, filter};
    if (!kept) return r;
    auto answer = [](bool valid) {
        ParsedAnswer p;
        p.kind = ParsedAnswer::Kind::label;
        p.label = valid ? "Negative" : "Positive";
        p.raw = p.label;
        return p;
    };
    r.step3_without = RepredictTrace{"r3o", answer(valid_without)};
    r.step3_with = RepredictTrace{"r3w", answer(valid_with)};
    return r;
}

}  // namespace

TEST_CASE("edit_distance_norm on the worked pairs") {
    CHECK(edit_distance_norm("abc", "abc") == 0.0);
    CHECK(edit_distance_norm("", "ab") == 100.0);
    CHECK(edit_distance_norm("", "") == 0.0);
    CHECK(edit_distance_norm("kitten", "sitting") ==
          doctest::Approx(42.857142857142854).epsilon(1e-12));
    CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("edit_distance_norm is symmetric, bounded, and zero iff equal") {
    Rng rng(42);
    const char* alphabet = "abcd";
    for (int i = 0; i < 2000; ++i) {
        std::string a, b;
        for (int k = rng.uniform_int(0, 12); k > 0; --k)
            a.push_back(alphabet[rng.uniform_index(4)]);
        for (int k = rng.uniform_int(0, 12); k > 0; --k)
            b.push_back(alphabet[rng.uniform_index(4)]);
        double dab = edit_distance_norm(a, b);
        double dba = edit_distance_norm(b, a);
        REQUIRE(dab == dba);
        REQUIRE(dab >= 0.0);
        REQUIRE(dab <= 100.0);
        REQUIRE((dab == 0.0) == (a == b));
    }
}

TEST_CASE("levenshtein equals the brute-force recursion") {
    Rng rng(7);
    const char* alphabet = "abcd";
    for (int i = 0; i < 3000; ++i) {
        std::string a, b;
        for (int k = rng.uniform_int(0, 12); k > 0; --k)
            a.push_back(alphabet[rng.uniform_index(4)]);
        for (int k = rng.uniform_int(0, 12); k > 0; --k)
            b.push_back(alphabet[rng.uniform_index(4)]);
        REQUIRE(levenshtein(a, b) == oracles::levenshtein_bruteforce(a, b));
    }
}

TEST_CASE("edit distance counts unicode scalars, not bytes") {
    // two-byte scalars: one substitution out of two characters
    CHECK(edit_distance_norm("\xC3\xA9\xC3\xA8", "\xC3\xA9\xC3\xA9") == 50.0);
    CHECK(scalar_length("\xC3\xA9\xC3\xA8") == 2);
}

TEST_CASE("gen_pct counts kept SCEs over parseable step-1 answers") {
    std::vector<RunRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record("e" + std::to_string(i), 0, true, true, true, true));
    CHECK(gen_pct(records) == 100.0);
    for (int i = 0; i < 5; ++i) records[i].step2->filter = {false, FilterOutcome::Reason::too_short};
    CHECK(gen_pct(records) == 50.0);

    std::vector<RunRecord> unparseable;
    for (int i = 0; i < 3; ++i)
        unparseable.push_back(make_record("u" + std::to_string(i), 0, false, false, false, false));
    CHECK_THROWS_AS(gen_pct(unparseable), std::domain_error);
    CHECK_THROWS_AS(gen_pct({}), std::domain_error);
}

TEST_CASE("val_pct checks the chosen condition against the target") {
    std::vector<RunRecord> records;
    records.push_back(make_record("a", 0, true, true, true, false));
    records.push_back(make_record("b", 0, true, true, true, false));
    records.push_back(make_record("c", 0, true, true, true, true));
    records.push_back(make_record("d", 0, true, true, false, false));
    CHECK(val_pct(records, false) == 75.0);
    CHECK(val_pct(records, true) == 25.0);

    // an unparseable re-prediction counts invalid but stays in the denominator
    records[0].step3_without->parsed = ParsedAnswer{};
    CHECK(val_pct(records, false) == 50.0);

    // a worked case: target 50, re-prediction 54 contributes invalid
    RunRecord fig;
    fig = make_record("fig", 0, true, true, false, false);
    fig.target = TargetLabel{PredictionValue(std::int64_t{50}), PredictionValue(std::int64_t{48})};
    ParsedAnswer p54;
    p54.kind = ParsedAnswer::Kind::integer;
    p54.number = 54;
    fig.step3_without->parsed = p54;
    CHECK(!record_valid(fig, false));

    std::vector<RunRecord> none{make_record("x", 0, true, false, false, false)};
    CHECK_THROWS_AS(val_pct(none, false), std::domain_error);
}

TEST_CASE("ed_over_valid averages only the valid pairs of the condition") {
    std::vector<RunRecord> records;
    // valid pair at distance 40%: 4 chars -> append 4 onto 6? use explicit strings
    records.push_back(make_record("a", 0, true, true, true, false, "aaaaaa", "aaaaaabbbb"));  // 40
    records.push_back(make_record("b", 0, true, true, false, false, "aaaaaa", "bbbbbbbbbb"));  // invalid
    CHECK(ed_over_valid(records, false) == 40.0);

    records.clear();
    records.push_back(make_record("c", 0, true, true, true, true, "aaaaaaaa", "aaaaaabb"));  // 25
    records.push_back(make_record("d", 0, true, true, true, true, "aaaa", "aabb"));          // 50
    CHECK(ed_over_valid(records, false) == doctest::Approx(37.5));
    CHECK(ed_over_valid(records, true) == doctest::Approx(37.5));

    records.push_back(make_record("e", 0, true, true, true, true, "same", "same"));  // 0
    CHECK(ed_over_valid(records, false) == 25.0);

    std::vector<RunRecord> none{make_record("x", 0, true, true, false, false)};
    CHECK_THROWS_AS(ed_over_valid(none, false), std::domain_error);
}

TEST_CASE("accuracy counts parsed answers equal to gold; unparseable counts incorrect") {
    std::vector<RunRecord> records;
    for (int i = 0; i < 4; ++i) {
        RunRecord r = make_record("e" + std::to_string(i), 0, i != 3, false, false, false);
        r.gold = GoldValue(std::string(i < 2 ? "Positive" : "Negative"));
        records.push_back(r);
    }
    // e0,e1 parsed Positive and correct; e2 parsed Positive but gold Negative;
    // e3 unparseable -> incorrect
    CHECK(accuracy_pct(records) == 50.0);

    std::vector<RunRecord> no_gold{make_record("x", 0, true, false, false, false)};
    CHECK_THROWS_AS(accuracy_pct(no_gold), std::domain_error);
}

TEST_CASE("metrics are order-insensitive folds") {
    ScriptedBackend backend;
    fixture::SstRun fx = fixture::build_sst_run(backend);
    auto path = std::filesystem::temp_directory_path() / "sce_metrics_perm.jsonl";
    std::filesystem::remove(path);
    RunStore store = run_pipeline(fx.config, fx.examples, backend, path);
    std::vector<RunRecord> records = store.records();
    double g = gen_pct(records), v = val_pct(records, false), e = ed_over_valid(records, false);
    Rng rng(5);
    for (int round = 0; round < 5; ++round) {
        for (std::size_t i = records.size(); i > 1; --i)
            std::swap(records[i - 1], records[rng.uniform_index(i)]);
        CHECK(gen_pct(records) == g);
        CHECK(val_pct(records, false) == v);
        CHECK(ed_over_valid(records, false) == e);
    }
}

TEST_CASE("norm_len_diff applies the normalized-difference formula") {
    CHECK(norm_len_diff({10, 10}, {10, 10}) == 0.0);
    CHECK(norm_len_diff({0, 0}, {5, 15}) == 100.0);
    CHECK(norm_len_diff({25}, {50}) == 50.0);
    CHECK(norm_len_diff({25}, {50}) == norm_len_diff({50}, {25}));  // swap-invariant
    CHECK_THROWS_AS(norm_len_diff({}, {1.0}), std::domain_error);
    CHECK_THROWS_AS(norm_len_diff({1.0}, {}), std::domain_error);
}

TEST_CASE("compute_metric_table reproduces the fixture numbers") {
    ScriptedBackend backend;
    fixture::SstRun fx = fixture::build_sst_run(backend);
    auto path = std::filesystem::temp_directory_path() / "sce_metrics_table.jsonl";
    std::filesystem::remove(path);
    RunStore store = run_pipeline(fx.config, fx.examples, backend, path);
    MetricTable table = compute_metric_table(store);
    CHECK(table.model == "scripted-sst2");
    CHECK(table.gen.mean == fixture::SstRun::kGen);
    CHECK(table.val.mean == fixture::SstRun::kVal);
    CHECK(table.val_c.mean == fixture::SstRun::kValC);
    CHECK(table.ed.mean == fixture::SstRun::kEd);
    CHECK(table.ed_c.mean == fixture::SstRun::kEdC);
    CHECK(table.accuracy.mean == fixture::SstRun::kAccuracy);
    CHECK(table.n_records == 20);
    CHECK(table.n_failed == 0);
    CHECK(table.gen.ci_half_width > 0.0);
    // val <= kept share: all outputs within [0, 100]
    for (const MetricCell* c : {&table.gen, &table.val, &table.val_c, &table.ed, &table.ed_c}) {
        CHECK(c->mean >= 0.0);
        CHECK(c->mean <= 100.0);
    }
}

TEST_CASE("paired series pair conditions per example") {
    ScriptedBackend backend;
    fixture::SstRun fx = fixture::build_sst_run(backend);
    auto path = std::filesystem::temp_directory_path() / "sce_metrics_pairs.jsonl";
    std::filesystem::remove(path);
    RunStore store = run_pipeline(fx.config, fx.examples, backend, path);
    PairedSeries val_pairs = paired_validity_series(store.records());
    REQUIRE(val_pairs.with_context.size() == 12);  // one per kept SCE
    double mean_with = 0, mean_without = 0;
    for (double v : val_pairs.with_context) mean_with += v;
    for (double v : val_pairs.without_context) mean_without += v;
    CHECK(mean_with / 12 == fixture::SstRun::kValC);
    CHECK(mean_without / 12 == fixture::SstRun::kVal);

    PairedSeries ed_pairs = paired_ed_series(store.records());
    CHECK(ed_pairs.with_context.size() == 6);  // valid under both conditions
}
