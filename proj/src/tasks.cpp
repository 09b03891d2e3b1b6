#include "sce/tasks.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace sce {

namespace {

std::string lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::unconstrained: return "unconstrained";
        case Strategy::rationale_based: return "rationale_based";
        case Strategy::cot: return "cot";
    }
    throw std::logic_error("unknown strategy");
}

Strategy strategy_from_name(std::string_view name) {
    if (name == "unconstrained") return Strategy::unconstrained;
    if (name == "rationale_based") return Strategy::rationale_based;
    if (name == "cot") return Strategy::cot;
    throw std::invalid_argument("unknown strategy: " + std::string(name));
}

bool LabelSpace::contains(std::string_view label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::optional<std::string> LabelSpace::match_label(std::string_view text) const {
    std::string needle = lower_copy(text);
    for (const auto& l : labels) {
        if (lower_copy(l) == needle) return l;
    }
    return std::nullopt;
}

void LabelSpace::validate() const {
    if (kind == LabelKind::positive_integer) {
        if (!labels.empty())
            throw std::invalid_argument("positive-integer label space carries no label list");
        return;
    }
    if (labels.empty()) throw std::invalid_argument("discrete label space is empty");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(lower_copy(l)).second)
            throw std::invalid_argument("duplicate label: " + l);
    }
}

const std::string& TaskSpec::cue_for(Strategy s) const {
    auto it = strategy_cues.find(s);
    if (it == strategy_cues.end())
        throw std::invalid_argument("no SCE cue for strategy " + std::string(strategy_name(s)) +
                                    " on task " + task_id);
    return it->second;
}

std::string gold_to_string(const GoldValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    return std::to_string(std::get<std::int64_t>(v));
}

namespace {

std::vector<TaskSpec> build_tasks() {
    std::vector<TaskSpec> tasks;

    {
        TaskSpec t;
        t.task_id = "discrimeval";
        t.label_space = {LabelKind::discrete, {"Yes", "No"}};
        t.field_names = {"scenario", "question"};
        t.sce_field = "scenario";
        t.min_words_filter = 15;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED SCENARIO:"},
                           {Strategy::cot, "REVISED SCENARIO:"},
                           {Strategy::rationale_based, "ALTERED SCENARIO:"}};
        tasks.push_back(std::move(t));
    }
    {
        TaskSpec t;
        t.task_id = "folktexts";
        t.label_space = {LabelKind::discrete, {"Below $50,000", "Above $50,000"}};
        t.field_names = {"description", "question", "choices"};
        t.sce_field = "description";
        t.min_words_filter = 60;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED DATA:"},
                           {Strategy::cot, "REVISED DATA:"},
                           {Strategy::rationale_based, "ALTERED DATA:"}};
        tasks.push_back(std::move(t));
    }
    {
        TaskSpec t;
        t.task_id = "twitter";
        t.label_space = {LabelKind::discrete, {"Bearish", "Bullish", "Neutral"}};
        t.field_names = {"post"};
        t.sce_field = "post";
        t.min_words_filter = 3;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED POST:"},
                           {Strategy::cot, "REVISED POST:"},
                           {Strategy::rationale_based, "ALTERED TWITTER POST:"}};
        tasks.push_back(std::move(t));
    }
    {
        TaskSpec t;
        t.task_id = "sst2";
        t.label_space = {LabelKind::discrete, {"Positive", "Negative"}};
        t.field_names = {"review"};
        t.sce_field = "review";
        t.min_words_filter = 1;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED REVIEW:"},
                           {Strategy::cot, "REVISED REVIEW:"},
                           {Strategy::rationale_based, "ALTERED REVIEW:"}};
        tasks.push_back(std::move(t));
    }
    {
        TaskSpec t;
        t.task_id = "gsm8k";
        t.label_space = {LabelKind::positive_integer, {}};
        t.field_names = {"problem"};
        t.sce_field = "problem";
        t.min_words_filter = 5;
        t.short_filter_requires_alpha_only = true;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED PROBLEM:"},
                           {Strategy::cot, "REVISED PROBLEM:"},
                           {Strategy::rationale_based, "ALTERED PROBLEM:"}};
        tasks.push_back(std::move(t));
    }
    {
        TaskSpec t;
        t.task_id = "mgnli";
        t.label_space = {LabelKind::discrete, {"Entail", "Contradict", "Neutral"}};
        t.field_names = {"premise", "hypothesis"};
        t.sce_field = "hypothesis";
        t.min_words_filter = 2;
        t.strategy_cues = {{Strategy::unconstrained, "REVISED HYPOTHESIS:"},
                           {Strategy::cot, "REVISED HYPOTHESIS:"},
                           {Strategy::rationale_based, "ALTERED HYPOTHESIS:"}};
        tasks.push_back(std::move(t));
    }

    for (auto& t : tasks) t.label_space.validate();
    return tasks;
}

const std::vector<TaskSpec>& all_tasks() {
    static const std::vector<TaskSpec> tasks = build_tasks();
    return tasks;
}

}  // namespace

const TaskSpec& task_by_id(std::string_view task_id) {
    for (const auto& t : all_tasks()) {
        if (t.task_id == task_id) return t;
    }
    throw std::invalid_argument("unknown task: " + std::string(task_id));
}

std::vector<std::string> task_ids() {
    std::vector<std::string> ids;
    for (const auto& t : all_tasks()) ids.push_back(t.task_id);
    return ids;
}

nlohmann::json rules_json() {
    nlohmann::json out;
    out["version"] = 1;
    out["answer_cue"] = "ANSWER:";
    out["rationales_cue"] = "RATIONALES:";
    for (const auto& t : all_tasks()) {
        nlohmann::json jt;
        jt["min_words_filter"] = t.min_words_filter;
        jt["short_filter_requires_alpha_only"] = t.short_filter_requires_alpha_only;
        if (t.label_space.is_discrete()) {
            jt["labels"] = t.label_space.labels;
        } else {
            jt["labels"] = "positive integers";
        }
        nlohmann::json cues;
        for (const auto& [s, cue] : t.strategy_cues) cues[std::string(strategy_name(s))] = cue;
        jt["sce_cues"] = cues;
        jt["fields"] = t.field_names;
        jt["sce_field"] = t.sce_field;
        out["tasks"][t.task_id] = jt;
    }
    return out;
}

}  // namespace sce
