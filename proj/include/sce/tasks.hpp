#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace sce {

enum class Strategy { unconstrained, rationale_based, cot };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

enum class LabelKind { discrete, positive_integer };

// The output domain of a task: either a fixed list of labels or the
// positive integers.
struct LabelSpace {
    LabelKind kind = LabelKind::discrete;
    std::vector<std::string> labels;  // ordered, discrete only

    bool is_discrete() const { return kind == LabelKind::discrete; }
    bool contains(std::string_view label) const;
    // Case-insensitive lookup returning the canonical label spelling.
    std::optional<std::string> match_label(std::string_view text) const;
    void validate() const;
};

struct TaskSpec {
    std::string task_id;
    LabelSpace label_space;
    std::vector<std::string> field_names;  // required input fields, in prompt order
    std::string sce_field;                 // the field the counterfactual rewrites
    int min_words_filter = 0;
    // gsm8k only: a short generation is filtered only when it also contains
    // no digits or math symbols.
    bool short_filter_requires_alpha_only = false;
    std::map<Strategy, std::string> strategy_cues;  // SCE extraction cue per strategy

    const std::string& cue_for(Strategy s) const;
};

// One dataset row. `gold` is a label string for discrete tasks or an
// integer for positive-integer tasks.
using GoldValue = std::variant<std::string, std::int64_t>;

struct Example {
    std::string example_id;
    std::map<std::string, std::string> fields;
    std::optional<GoldValue> gold;
};

std::string gold_to_string(const GoldValue& v);

// Built-in specs for the six supported tasks.
const TaskSpec& task_by_id(std::string_view task_id);
std::vector<std::string> task_ids();

// Cue and filter-threshold table as data, for audit (`dump-rules`).
nlohmann::json rules_json();

}  // namespace sce
