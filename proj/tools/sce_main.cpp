#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "sce/analysis.hpp"
#include "sce/ingest.hpp"
#include "sce/metrics.hpp"
#include "sce/pipeline.hpp"
#include "sce/report.hpp"
#include "sce/stats.hpp"

namespace {

using nlohmann::json;
using namespace sce;

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j = json::parse(in);
    if (seed_override) j["seed"] = *seed_override;
    return RunConfig::from_json(j);
}

std::vector<Example> load_dataset(const RunConfig& config) {
    if (config.dataset_path.empty())
        throw std::runtime_error("config carries no dataset_path");
    const TaskSpec& task = task_by_id(config.task_id);
    std::vector<Example> examples = load_jsonl(config.dataset_path, task);
    for (auto& ex : examples) ex = preprocess_example(task, std::move(ex));
    return select_subset(examples, task, config.subset_per_class);
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

void print_run_summary(const RunStore& store) {
    int kept = 0, failed = 0, parseable = 0;
    for (const auto& r : store.records()) {
        if (r.failed) ++failed;
        if (r.step1 && r.step1->parsed.parsed()) ++parseable;
        if (r.kept()) ++kept;
    }
    std::cout << "records: " << store.records().size() << "  parseable step-1: " << parseable
              << "  kept SCEs: " << kept << "  failed: " << failed << "\n"
              << "store: " << store.path().string() << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed, const std::string& transcript_path, bool resume) {
    RunConfig config = resume ? RunStore::open(out_path).config()
                              : load_config(config_path, seed);
    std::vector<Example> examples = load_dataset(config);
    std::shared_ptr<TranscriptLog> transcript;
    if (!transcript_path.empty()) transcript = std::make_shared<TranscriptLog>(transcript_path);
    auto backend = make_backend(config.backend, transcript);
    RunStore store = resume ? resume_pipeline(out_path, config, examples, *backend)
                            : run_pipeline(config, examples, *backend, out_path);
    print_run_summary(store);
    return 0;
}

int cmd_score(const std::string& store_path, const std::string& out_path,
              const std::string& format) {
    RunStore store = RunStore::open(store_path);
    MetricTable table = compute_metric_table(store);
    ReportSpec spec;
    spec.format = format == "csv" ? ReportSpec::Format::csv : ReportSpec::Format::markdown;
    spec.bold_significant = false;
    write_or_print(render_table({table}, {}, spec), out_path);
    return 0;
}

json interval_json(const IntervalEstimate& est) {
    return json{{"point", est.point},
                {"lo", est.lo},
                {"hi", est.hi},
                {"method", est.method == IntervalEstimate::Method::sem95 ? "sem95"
                                                                         : "bootstrap_percentile"}};
}

int cmd_stats(const std::string& store_path, const std::string& out_path, int resamples,
              std::uint64_t seed) {
    RunStore store = RunStore::open(store_path);
    const auto& records = store.records();
    json out;
    out["store"] = store_path;
    out["model"] = store.config().backend.model_name;

    PairedSeries val_series = paired_validity_series(records);
    if (!val_series.with_context.empty()) {
        TestResult t = paired_permutation_test(val_series.with_context,
                                               val_series.without_context, resamples, seed);
        out["validity"] = {{"effect", t.effect},
                           {"p_value", t.p_value},
                           {"pairs", val_series.with_context.size()},
                           {"resamples", t.resamples}};
    }
    PairedSeries ed_series = paired_ed_series(records);
    if (!ed_series.with_context.empty()) {
        TestResult t = paired_permutation_test(ed_series.with_context,
                                               ed_series.without_context, resamples, seed);
        out["edit_distance"] = {{"effect", t.effect},
                                {"p_value", t.p_value},
                                {"pairs", ed_series.with_context.size()},
                                {"resamples", t.resamples}};
    }
    for (bool with : {false, true}) {
        ConditionLengths lengths = sce_lengths_by_validity(records, with);
        const char* key = with ? "norm_len_diff_with" : "norm_len_diff_without";
        if (!lengths.valid.empty() && !lengths.invalid.empty()) {
            json entry;
            entry["value"] = norm_len_diff(lengths.valid, lengths.invalid);
            entry["bootstrap"] = interval_json(
                bootstrap_norm_len_diff(lengths.valid, lengths.invalid, resamples, seed));
            entry["n_valid"] = lengths.valid.size();
            entry["n_invalid"] = lengths.invalid.size();
            out[key] = entry;
        }
    }
    write_or_print(out.dump(2), out_path);
    return 0;
}

int cmd_analyze(const std::string& store_path, const std::string& out_path,
                const std::string& vectors_path, const std::string& condition, bool use_embeddings,
                std::uint64_t cluster_seed) {
    RunStore store = RunStore::open(store_path);
    bool with_context = condition == "with";

    std::vector<const RunRecord*> kept;
    for (const auto& r : store.records())
        if (!r.failed && r.kept()) kept.push_back(&r);
    if (kept.empty()) throw std::runtime_error("store has no kept SCEs to analyze");

    std::vector<bool> validity;
    for (const auto* r : kept) validity.push_back(record_valid(*r, with_context));

    std::unique_ptr<ChatBackend> backend;
    std::vector<double> drifts(kept.size(), std::numeric_limits<double>::quiet_NaN());
    if (use_embeddings) {
        backend = make_backend(store.config().backend);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            EmbeddingVector orig = backend->embed(kept[i]->sce_source);
            EmbeddingVector sce = backend->embed(*kept[i]->step2->sce);
            drifts[i] = drift(orig, sce);
        }
    }

    std::ostringstream csv;
    csv << "example_id,trial,valid_without,valid_with,reading_ease,grade_level,drift\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const RunRecord& r = *kept[i];
        csv << r.example_id << ',' << r.trial << ',' << (record_valid(r, false) ? 1 : 0) << ','
            << (record_valid(r, true) ? 1 : 0) << ',';
        try {
            ReadabilityScore score = flesch_reading_ease(*r.step2->sce);
            csv << score.reading_ease << ',' << score.grade_level;
        } catch (const std::invalid_argument&) {
            csv << ',';  // SCE with no readable words
        }
        csv << ',';
        if (!std::isnan(drifts[i])) csv << drifts[i];
        csv << '\n';
    }
    write_or_print(csv.str(), out_path);

    json summary;
    summary["condition"] = with_context ? "with" : "without";
    summary["n"] = kept.size();
    if (!vectors_path.empty()) {
        RepresentationSet set = load_vectors(vectors_path, validity);
        json clusters;
        std::vector<std::pair<int, int>> deltas;
        for (auto metric : {ClusterMetric::euclid_raw, ClusterMetric::euclid_norm,
                            ClusterMetric::cosine_raw, ClusterMetric::cosine_norm}) {
            std::vector<int> assignment = kmeans2(set.vectors, metric, cluster_seed);
            auto [d0, d1] = cluster_deltas(assignment, set.labels);
            clusters[std::string(cluster_metric_name(metric))] = {{"delta0", d0}, {"delta1", d1}};
            deltas.emplace_back(d0, d1);
        }
        summary["variant"] = std::string(representation_variant_name(set.variant));
        summary["clusters"] = clusters;
        summary["sep_score_across_metrics"] = sep_score(deltas);
    }
    std::cerr << summary.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& store_paths, const std::string& out_path,
               const std::string& format, double alpha, bool no_bold, int resamples,
               std::uint64_t seed) {
    std::vector<MetricTable> tables;
    std::map<std::string, PairedTests> tests;
    for (const auto& path : store_paths) {
        RunStore store = RunStore::open(path);
        MetricTable table = compute_metric_table(store);
        PairedTests t;
        PairedSeries val_series = paired_validity_series(store.records());
        if (!val_series.with_context.empty())
            t.validity = paired_permutation_test(val_series.with_context,
                                                 val_series.without_context, resamples, seed);
        PairedSeries ed_series = paired_ed_series(store.records());
        if (!ed_series.with_context.empty())
            t.edit_distance = paired_permutation_test(ed_series.with_context,
                                                      ed_series.without_context, resamples, seed);
        tests[table.model] = t;
        tables.push_back(std::move(table));
    }
    ReportSpec spec;
    spec.format = format == "csv" ? ReportSpec::Format::csv : ReportSpec::Format::markdown;
    spec.bold_significant = !no_bold;
    spec.significance_alpha = alpha;
    write_or_print(render_table(tables, tests, spec), out_path);
    return 0;
}

int cmd_dump_prompts(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& t : all_prompt_templates()) {
        std::ofstream out(std::filesystem::path(out_dir) / (t.name + ".txt"),
                          std::ios::trunc | std::ios::binary);
        out << t.text;
    }
    std::cout << "wrote " << all_prompt_templates().size() << " templates to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual self-explanation evaluation harness"};
    app.require_subcommand(1);

    std::string config_path, out_path, store_path, transcript_path, format = "markdown";
    std::string vectors_path, condition = "without";
    std::vector<std::string> store_paths;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t stat_seed = 0, cluster_seed = 0;
    int resamples = 10000;
    double alpha = 0.05;
    bool no_bold = false, use_embeddings = false;

    auto* run = app.add_subcommand("run", "execute steps 1-3 over a dataset");
    run->add_option("--config", config_path, "run config JSON")->required();
    run->add_option("--out", out_path, "output store path")->required();
    run->add_option("--seed", seed_override, "override the config seed");
    run->add_option("--transcript", transcript_path, "request/response log path");

    auto* resume = app.add_subcommand("resume", "continue an interrupted run");
    resume->add_option("--store", out_path, "existing store path")->required();
    resume->add_option("--transcript", transcript_path, "request/response log path");

    auto* score = app.add_subcommand("score", "compute the metric table for a store");
    score->add_option("--store", store_path, "run store")->required();
    score->add_option("--out", out_path, "output file (stdout if omitted)");
    score->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));

    auto* stats = app.add_subcommand("stats", "permutation tests and bootstrap intervals");
    stats->add_option("--store", store_path, "run store")->required();
    stats->add_option("--out", out_path, "output file (stdout if omitted)");
    stats->add_option("--resamples", resamples, "resample count");
    stats->add_option("--seed", stat_seed, "resampling seed");

    auto* analyze = app.add_subcommand("analyze", "readability, drift, and clustering");
    analyze->add_option("--store", store_path, "run store")->required();
    analyze->add_option("--out", out_path, "per-record CSV (stdout if omitted)");
    analyze->add_option("--vectors", vectors_path, "imported representation vectors");
    analyze->add_option("--condition", condition, "validity condition for flags")
        ->check(CLI::IsMember({"with", "without"}));
    analyze->add_flag("--embed", use_embeddings, "compute drift via the embeddings endpoint");
    analyze->add_option("--cluster-seed", cluster_seed, "k-means seed");

    auto* report = app.add_subcommand("report", "multi-model table");
    report->add_option("--store", store_paths, "run stores (repeatable)")->required();
    report->add_option("--out", out_path, "output file (stdout if omitted)");
    report->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    report->add_option("--alpha", alpha, "significance threshold for bolding");
    report->add_flag("--no-bold", no_bold, "disable significance bolding");
    report->add_option("--resamples", resamples, "permutation resamples");
    report->add_option("--seed", stat_seed, "permutation seed");

    auto* dump_prompts = app.add_subcommand("dump-prompts", "write the prompt templates");
    std::string prompts_dir = "prompts";
    dump_prompts->add_option("--out", prompts_dir, "output directory");

    auto* dump_rules = app.add_subcommand("dump-rules", "cue and filter table as JSON");
    dump_rules->add_option("--out", out_path, "output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_path, seed_override, transcript_path, false);
        if (resume->parsed()) return cmd_run("", out_path, std::nullopt, transcript_path, true);
        if (score->parsed()) return cmd_score(store_path, out_path, format);
        if (stats->parsed()) return cmd_stats(store_path, out_path, resamples, stat_seed);
        if (analyze->parsed())
            return cmd_analyze(store_path, out_path, vectors_path, condition, use_embeddings,
                               cluster_seed);
        if (report->parsed())
            return cmd_report(store_paths, out_path, format, alpha, no_bold, resamples, stat_seed);
        if (dump_prompts->parsed()) return cmd_dump_prompts(prompts_dir);
        if (dump_rules->parsed()) {
            write_or_print(rules_json().dump(2), out_path);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
