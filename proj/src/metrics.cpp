#include "sce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sce {

namespace {

// Decodes UTF-8 into scalar values; an invalid byte stands for itself so
// the function is total and deterministic on arbitrary input.
std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        char32_t value = c;
        if (c >= 0xF0 && c <= 0xF4) {
            extra = 3;
            value = c & 0x07u;
        } else if (c >= 0xE0) {
            extra = 2;
            value = c & 0x0Fu;
        } else if (c >= 0xC2) {
            extra = 1;
            value = c & 0x1Fu;
        }
        if (extra > 0 && i + extra < s.size()) {
            bool valid = true;
            for (std::size_t k = 1; k <= extra; ++k) {
                unsigned char cc = static_cast<unsigned char>(s[i + k]);
                if ((cc & 0xC0u) != 0x80u) {
                    valid = false;
                    break;
                }
                value = (value << 6) | (cc & 0x3Fu);
            }
            if (valid) {
                out.push_back(value);
                i += extra + 1;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// 95% half-width over pooled per-sample values; 0 when n < 2.
double ci_half_width(const std::vector<double>& samples) {
    std::size_t n = samples.size();
    if (n < 2) return 0.0;
    double m = mean_of(samples);
    double ss = 0.0;
    for (double v : samples) ss += (v - m) * (v - m);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

std::map<int, std::vector<const RunRecord*>> group_by_trial(const std::vector<RunRecord>& records) {
    std::map<int, std::vector<const RunRecord*>> out;
    for (const auto& r : records) {
        if (r.failed) continue;
        out[r.trial].push_back(&r);
    }
    return out;
}

bool step1_parsed(const RunRecord& r) { return r.step1 && r.step1->parsed.parsed(); }

bool answer_equals_target(const ParsedAnswer& answer, const TargetLabel& target) {
    if (std::holds_alternative<std::string>(target.value)) {
        return answer.kind == ParsedAnswer::Kind::label &&
               answer.label == std::get<std::string>(target.value);
    }
    return answer.kind == ParsedAnswer::Kind::integer &&
           answer.number == std::get<std::int64_t>(target.value);
}

double mean_of_trial_means(const std::vector<double>& trial_values, const char* what) {
    if (trial_values.empty()) throw std::domain_error(std::string(what) + ": no qualifying trials");
    return mean_of(trial_values);
}

}  // namespace

std::size_t scalar_length(std::string_view text) { return decode_utf8(text).size(); }

std::size_t levenshtein(std::string_view a_utf8, std::string_view b_utf8) {
    std::u32string a = decode_utf8(a_utf8);
    std::u32string b = decode_utf8(b_utf8);
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double edit_distance_norm(std::string_view a, std::string_view b) {
    std::size_t la = scalar_length(a);
    std::size_t lb = scalar_length(b);
    std::size_t longer = std::max(la, lb);
    if (longer == 0) return 0.0;
    return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longer) * 100.0;
}

bool record_valid(const RunRecord& rec, bool with_context) {
    if (!rec.kept() || !rec.target) return false;
    const auto& trace = with_context ? rec.step3_with : rec.step3_without;
    return trace && answer_equals_target(trace->parsed, *rec.target);
}

double gen_pct(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::domain_error("gen_pct: no records");
    std::vector<double> per_trial;
    for (const auto& [trial, recs] : group_by_trial(records)) {
        int denom = 0, kept = 0;
        for (const auto* r : recs) {
            if (!step1_parsed(*r)) continue;
            ++denom;
            if (r->kept()) ++kept;
        }
        if (denom > 0) per_trial.push_back(100.0 * kept / denom);
    }
    return mean_of_trial_means(per_trial, "gen_pct");
}

double val_pct(const std::vector<RunRecord>& records, bool with_context) {
    std::vector<double> per_trial;
    for (const auto& [trial, recs] : group_by_trial(records)) {
        int denom = 0, valid = 0;
        for (const auto* r : recs) {
            if (!r->kept()) continue;
            ++denom;
            if (record_valid(*r, with_context)) ++valid;
        }
        if (denom > 0) per_trial.push_back(100.0 * valid / denom);
    }
    return mean_of_trial_means(per_trial, "val_pct");
}

double ed_over_valid(const std::vector<RunRecord>& records, bool with_context) {
    std::vector<double> per_trial;
    for (const auto& [trial, recs] : group_by_trial(records)) {
        std::vector<double> values;
        for (const auto* r : recs) {
            if (!record_valid(*r, with_context)) continue;
            values.push_back(edit_distance_norm(r->sce_source, *r->step2->sce));
        }
        if (!values.empty()) per_trial.push_back(mean_of(values));
    }
    return mean_of_trial_means(per_trial, "ed_over_valid");
}

double accuracy_pct(const std::vector<RunRecord>& records) {
    std::vector<double> per_trial;
    for (const auto& [trial, recs] : group_by_trial(records)) {
        int denom = 0, correct = 0;
        for (const auto* r : recs) {
            if (!r->gold) continue;
            ++denom;
            // an unparseable Step-1 answer counts as incorrect
            if (r->step1 && r->step1->parsed.parsed()) {
                const ParsedAnswer& p = r->step1->parsed;
                if (std::holds_alternative<std::string>(*r->gold)) {
                    if (p.kind == ParsedAnswer::Kind::label &&
                        p.label == std::get<std::string>(*r->gold))
                        ++correct;
                } else if (p.kind == ParsedAnswer::Kind::integer &&
                           p.number == std::get<std::int64_t>(*r->gold)) {
                    ++correct;
                }
            }
        }
        if (denom > 0) per_trial.push_back(100.0 * correct / denom);
    }
    return mean_of_trial_means(per_trial, "accuracy_pct");
}

double norm_len_diff(const std::vector<double>& valid_lengths,
                     const std::vector<double>& invalid_lengths) {
    if (valid_lengths.empty() || invalid_lengths.empty())
        throw std::domain_error("norm_len_diff: both groups must be non-empty");
    double lv = mean_of(valid_lengths);
    double li = mean_of(invalid_lengths);
    double longer = std::max(lv, li);
    if (longer == 0.0) return 0.0;
    return std::abs(lv - li) / longer * 100.0;
}

ConditionLengths sce_lengths_by_validity(const std::vector<RunRecord>& records, bool with_context) {
    ConditionLengths out;
    for (const auto& r : records) {
        if (r.failed || !r.kept()) continue;
        double len = static_cast<double>(scalar_length(*r.step2->sce));
        if (record_valid(r, with_context))
            out.valid.push_back(len);
        else
            out.invalid.push_back(len);
    }
    return out;
}

namespace {

PairedSeries paired_series(const std::vector<RunRecord>& records, bool ed_mode) {
    // example_id -> accumulated (with, without) values over trials
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_example;
    for (const auto& r : records) {
        if (r.failed || !r.kept()) continue;
        bool vw = record_valid(r, true);
        bool vo = record_valid(r, false);
        if (ed_mode) {
            if (!(vw && vo)) continue;  // ED is defined only for valid SCEs
            double ed = edit_distance_norm(r.sce_source, *r.step2->sce);
            per_example[r.example_id].first.push_back(ed);
            per_example[r.example_id].second.push_back(ed);
        } else {
            per_example[r.example_id].first.push_back(vw ? 100.0 : 0.0);
            per_example[r.example_id].second.push_back(vo ? 100.0 : 0.0);
        }
    }
    PairedSeries out;
    for (const auto& [id, values] : per_example) {
        out.with_context.push_back(mean_of(values.first));
        out.without_context.push_back(mean_of(values.second));
    }
    return out;
}

}  // namespace

PairedSeries paired_validity_series(const std::vector<RunRecord>& records) {
    return paired_series(records, false);
}

PairedSeries paired_ed_series(const std::vector<RunRecord>& records) {
    return paired_series(records, true);
}

MetricTable compute_metric_table(const RunStore& store) {
    const auto& records = store.records();
    MetricTable table;
    table.model = store.config().backend.model_name;
    table.task_id = store.config().task_id;
    table.strategy = store.config().strategy;
    table.temperature = store.config().temperature;
    table.trials = store.config().trials;
    table.n_records = static_cast<int>(records.size());
    for (const auto& r : records)
        if (r.failed) ++table.n_failed;

    std::vector<double> gen_samples, val_samples, valc_samples, ed_samples, edc_samples,
        acc_samples;
    for (const auto& r : records) {
        if (r.failed) continue;
        if (step1_parsed(r)) gen_samples.push_back(r.kept() ? 100.0 : 0.0);
        if (r.kept()) {
            val_samples.push_back(record_valid(r, false) ? 100.0 : 0.0);
            valc_samples.push_back(record_valid(r, true) ? 100.0 : 0.0);
            if (record_valid(r, false))
                ed_samples.push_back(edit_distance_norm(r.sce_source, *r.step2->sce));
            if (record_valid(r, true))
                edc_samples.push_back(edit_distance_norm(r.sce_source, *r.step2->sce));
        }
        if (r.gold) {
            bool correct = false;
            if (step1_parsed(r)) {
                const ParsedAnswer& p = r.step1->parsed;
                correct = std::holds_alternative<std::string>(*r.gold)
                              ? (p.kind == ParsedAnswer::Kind::label &&
                                 p.label == std::get<std::string>(*r.gold))
                              : (p.kind == ParsedAnswer::Kind::integer &&
                                 p.number == std::get<std::int64_t>(*r.gold));
            }
            acc_samples.push_back(correct ? 100.0 : 0.0);
        }
    }

    table.gen = {gen_pct(records), ci_half_width(gen_samples)};
    table.val = {val_pct(records, false), ci_half_width(val_samples)};
    table.val_c = {val_pct(records, true), ci_half_width(valc_samples)};
    if (!ed_samples.empty()) {
        table.ed = {ed_over_valid(records, false), ci_half_width(ed_samples)};
        table.has_ed = true;
    }
    if (!edc_samples.empty()) {
        table.ed_c = {ed_over_valid(records, true), ci_half_width(edc_samples)};
        table.has_ed_c = true;
    }
    if (!acc_samples.empty()) {
        table.accuracy = {accuracy_pct(records), ci_half_width(acc_samples)};
        table.has_accuracy = true;
    }

    for (bool with : {false, true}) {
        ConditionLengths lengths = sce_lengths_by_validity(records, with);
        if (!lengths.valid.empty() && !lengths.invalid.empty()) {
            double v = norm_len_diff(lengths.valid, lengths.invalid);
            if (with) {
                table.len_diff_with = v;
                table.has_len_diff_with = true;
            } else {
                table.len_diff_without = v;
                table.has_len_diff_without = true;
            }
        }
    }
    return table;
}

}  // namespace sce
