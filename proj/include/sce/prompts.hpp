#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sce/conversation.hpp"
#include "sce/rng.hpp"
#include "sce/tasks.hpp"

namespace sce {

using PredictionValue = std::variant<std::string, std::int64_t>;

std::string prediction_to_string(const PredictionValue& v);

// The counterfactual target: a label != the parsed prediction, or
// prediction + epsilon with epsilon in {1..10} for integer tasks.
struct TargetLabel {
    PredictionValue value;
    PredictionValue source_prediction;

    std::string value_text() const { return prediction_to_string(value); }
};

TargetLabel pick_target(const LabelSpace& space, const PredictionValue& prediction, Rng& rng);

// Step 1: the task prompt over the example's fields as a fresh
// single-turn conversation.
Conversation render_step1(const TaskSpec& task, const Example& example, Strategy strategy);

// Rationale-elicitation turn used by rationale_based between Steps 1 and 2.
std::string render_rationale_request(const TaskSpec& task, const PredictionValue& prediction);

// Step 2: extend the prior conversation with the counterfactual request.
// The prior must end with an assistant turn (the Step-1 answer, plus the
// rationale exchange for rationale_based).
Conversation render_sce_request(const TaskSpec& task, Strategy strategy, const TargetLabel& target,
                                Conversation prior);

// Step 3: prediction on the SCE. Without context this is a fresh Step-1
// conversation with the task's rewritable field replaced by the SCE text;
// with context the same turn is appended to the full prior conversation.
Conversation render_repredict(const TaskSpec& task, Strategy strategy, const std::string& sce_text,
                              const Example& example, const std::optional<Conversation>& context);

// Template access for `dump-prompts` and golden-file checks. Names follow
// task.strategy.stepN; bodies keep the {FIELD} / <Complement> /
// <Original Answer> slot markers.
struct PromptTemplate {
    std::string name;  // e.g. "sst2.unconstrained.step1"
    std::string text;
};

std::vector<PromptTemplate> all_prompt_templates();

}  // namespace sce
