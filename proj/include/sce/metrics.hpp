#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sce/pipeline.hpp"

namespace sce {

// Character-level Levenshtein distance over Unicode scalar values,
// case-sensitive, no whitespace normalization.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Levenshtein(a, b) / max(|a|, |b|) * 100; 0 when both strings are empty.
double edit_distance_norm(std::string_view a, std::string_view b);

// Number of Unicode scalar values in a UTF-8 string (the length unit used
// throughout).
std::size_t scalar_length(std::string_view text);

// A kept SCE is valid under a condition when that condition's parsed
// re-prediction equals the target. Unparseable or missing re-predictions
// count as not valid.
bool record_valid(const RunRecord& rec, bool with_context);

// All metrics ignore records marked failed (harness faults, not model
// behavior) and aggregate per trial first, then take the unweighted mean
// across trials.
double gen_pct(const std::vector<RunRecord>& records);
double val_pct(const std::vector<RunRecord>& records, bool with_context);
double ed_over_valid(const std::vector<RunRecord>& records, bool with_context);
double accuracy_pct(const std::vector<RunRecord>& records);

// |mean(valid) - mean(invalid)| / max of the means * 100.
double norm_len_diff(const std::vector<double>& valid_lengths,
                     const std::vector<double>& invalid_lengths);

// SCE lengths split by validity under one condition, for the length
// statistic and its bootstrap.
struct ConditionLengths {
    std::vector<double> valid;
    std::vector<double> invalid;
};
ConditionLengths sce_lengths_by_validity(const std::vector<RunRecord>& records, bool with_context);

// Per-example paired series (with-context first) for permutation tests.
// Validity pairs cover kept SCEs; ED pairs cover SCEs valid under both
// conditions. Multiple trials of one example are averaged before pairing.
struct PairedSeries {
    std::vector<double> with_context;
    std::vector<double> without_context;
};
PairedSeries paired_validity_series(const std::vector<RunRecord>& records);
PairedSeries paired_ed_series(const std::vector<RunRecord>& records);

struct MetricCell {
    double mean = 0.0;
    double ci_half_width = 0.0;
};

struct MetricTable {
    std::string model;
    std::string task_id;
    Strategy strategy = Strategy::unconstrained;
    double temperature = 0.0;
    int trials = 0;
    int n_records = 0;
    int n_failed = 0;

    MetricCell gen, val, val_c, ed, ed_c, accuracy;
    bool has_accuracy = false;
    bool has_ed = false, has_ed_c = false;
    double len_diff_without = 0.0, len_diff_with = 0.0;
    bool has_len_diff_without = false, has_len_diff_with = false;
};

MetricTable compute_metric_table(const RunStore& store);

}  // namespace sce
