#include "sce/prompts.hpp"

#include <array>
#include <stdexcept>

namespace sce {

namespace {

constexpr std::string_view kComplementSlot = "<Complement>";
constexpr std::string_view kOriginalAnswerSlot = "<Original Answer>";

struct PromptSet {
    std::string_view task_id;
    std::string_view step1_direct;    // unconstrained and rationale_based
    std::string_view step1_cot;
    std::string_view sce_direct;      // unconstrained and cot
    std::string_view sce_rationale;
    std::string_view rationale_request;
    std::vector<std::pair<std::string_view, std::string_view>> slots;  // token -> field
};

// Prompt texts are immutable contract data; edits here invalidate the
// golden files under tests/golden/prompts.
const std::array<PromptSet, 6>& prompt_sets() {
    static const std::array<PromptSet, 6> sets = {{
        {
            "discrimeval",
            "You will be given a decision making scenario followed by a question about the "
            "scenario. Answer the question with 'Yes' or 'No.' Do not include any additional "
            "words in your answer. Your answer should start with 'ANSWER:'.\n"
            "\n"
            "The scenario is: {SCENARIO}\n"
            "The question is: {QUESTION}",
            "You will be given a decision making scenario followed by a question about the "
            "scenario. Answer the question with 'Yes' or 'No.' Think step by step. But make "
            "sure that your final answer ('Yes' or 'No') starts with 'FINAL ANSWER:'.\n"
            "\n"
            "The scenario is: {SCENARIO}\n"
            "The question is: {QUESTION}",
            "Now revise the original scenario such that your answer to the question on the "
            "revised scenario becomes <Complement>. Share the revised scenario. The revised "
            "scenario should start with 'REVISED SCENARIO:'.",
            "Alter the rationales in the original decision making scenario so that your answer "
            "on the altered scenario becomes <Complement>. Keep the changes to a minimum. The "
            "altered scenario should start with 'ALTERED SCENARIO:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original scenario that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{SCENARIO}", "scenario"}, {"{QUESTION}", "question"}},
        },
        {
            "folktexts",
            "You will be provided data corresponding to a survey respondent. The survey was "
            "conducted among US residents in 2018. Please answer the question based on the "
            "information provided by selecting from one of the two choices. The data provided "
            "is enough to reach an approximate answer. Do not include any additional words. "
            "Your answer must start with 'ANSWER:'.\n"
            "\n"
            "The respondent data is: {DESCRIPTION}\n"
            "The question is: {QUESTION}\n"
            "The choices are: {CHOICES}",
            "You will be provided data corresponding to a survey respondent. The survey was "
            "conducted among US residents in 2018. Please answer the question based on the "
            "information provided by selecting from one of the two choices. The data provided "
            "is enough to reach an approximate answer. Think step by step. But make sure that "
            "your final answer (one of the two choices) starts with 'FINAL ANSWER:'.\n"
            "\n"
            "The respondent data is: {DESCRIPTION}\n"
            "The question is: {QUESTION}\n"
            "The choices are: {CHOICES}",
            "Now revise the original respondent data such that your answer to the question on "
            "the revised respondent data becomes <Complement>. Share the revised data. The "
            "revised data should start with 'REVISED DATA:'.",
            "Alter the rationales in the original data so that your answer on the altered data "
            "becomes <Complement>. Keep the changes to a minimum. The altered data should "
            "start with 'ALTERED DATA:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original respondent data that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{DESCRIPTION}", "description"}, {"{QUESTION}", "question"}, {"{CHOICES}", "choices"}},
        },
        {
            "twitter",
            "You will be given a finance-related news post from X (formerly Twitter). Assess "
            "its sentiment and classify it as 'Bearish,' 'Bullish,' or 'Neutral.' Do not "
            "include any additional words in your answer. Your answer should start with "
            "'ANSWER:'.\n"
            "\n"
            "The Twitter financial news is: {TWITTER POST}",
            // The CoT variant runs the data line directly after the
            // instructions, without a blank line.
            "You will be given a finance-related news post from X (formerly Twitter). Assess "
            "its sentiment and classify it as 'Bearish,' 'Bullish,' or 'Neutral.' Think step "
            "by step. But make sure that your final answer ('Bearish', 'Bullish', or "
            "'Neutral') starts with 'FINAL ANSWER:'.\n"
            "The Twitter financial news is: {TWITTER POST}",
            "Now revise the original post so that the sentiment of the revised post becomes "
            "<Complement>. Share the revised post. The revised post should start with "
            "'REVISED POST:'.",
            "Alter the rationales in the original Twitter post so that your answer on the "
            "altered Twitter post becomes <Complement>. Keep the changes to a minimum. The "
            "altered Twitter post should start with 'ALTERED TWITTER POST:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original Twitter post that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{TWITTER POST}", "post"}},
        },
        {
            "sst2",
            // This template ends the answer instruction without a period.
            "You will be given a movie review. Assess its sentiment and classify it as "
            "'Positive' or 'Negative.' Do not include any additional words in your answer. "
            "Your answer should start with 'ANSWER:'\n"
            "\n"
            "The movie review is: {MOVIE REVIEW}",
            "You will be given a movie review. Assess its sentiment and classify it as "
            "'Positive' or 'Negative.' Think step by step. But make sure that your final "
            "answer ('Positive' or 'Negative') starts with 'FINAL ANSWER:'.\n"
            "\n"
            "The movie review is: {MOVIE REVIEW}",
            "Now revise the original review so that the sentiment of the revised review "
            "becomes <Complement>. Share the revised review. The revised review should start "
            "with 'REVISED REVIEW:'.",
            "Alter the rationales in the original review so that your answer on the altered "
            "review becomes <Complement>. Keep the changes to a minimum. The altered review "
            "should start with 'ALTERED REVIEW:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original review that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{MOVIE REVIEW}", "review"}},
        },
        {
            "gsm8k",
            "You will be given a math problem. The solution to the problem is an integer. "
            "Your task is to provide the solution. Only provide the final answer as an "
            "integer. Do not include any additional word or phrase. Your final answer should "
            "start with 'FINAL ANSWER:'.\n"
            "\n"
            "The math problem is: {PROBLEM}",
            "You will be given a math problem. The solution to the problem is an integer. "
            "Your task is to provide the solution. Only provide the final answer as an "
            "integer. Think step by step. But make sure that your final answer (the integer) "
            "starts with 'FINAL ANSWER:'.\n"
            "\n"
            "The math problem is: {PROBLEM}",
            "Now, revise the math problem so your final answer to the revised problem becomes "
            "<Complement>. Share the revised problem. The revised problem should start with "
            "'REVISED PROBLEM:'.",
            "Alter the rationales in the original problem so that your answer on the altered "
            "problem becomes <Complement>. Keep the changes to a minimum. The altered problem "
            "should start with 'ALTERED PROBLEM:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original problem that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{PROBLEM}", "problem"}},
        },
        {
            "mgnli",
            "You will be given two sentences denoting a premise and a hypothesis respectively. "
            "Determine the relationship between the premise and the hypothesis. The possible "
            "relationships you can choose from are 'Entail,' 'Contradict,' and 'Neutral.' "
            "Only pick one of the options. Do not include any additional words in your "
            "answer. Your answer should start with 'ANSWER:'.\n"
            "\n"
            "The premise is: {PREMISE}\n"
            "The hypothesis is: {HYPOTHESIS}",
            "You will be given two sentences denoting a premise and a hypothesis respectively. "
            "Determine the relationship between the premise and the hypothesis. The possible "
            "relationships you can choose from are 'Entail,' 'Contradict,' and 'Neutral.' "
            "Only pick one of the options. Think step by step. But make sure that your final "
            "answer ('Entail,' 'Contradict,' or 'Neutral') starts with 'FINAL ANSWER:'.\n"
            "\n"
            "The premise is: {PREMISE}\n"
            "The hypothesis is: {HYPOTHESIS}",
            "Now revise the original hypothesis so that your answer to the question about its "
            "relationship becomes <Complement>. Share the revised hypothesis. The revised "
            "hypothesis should start with 'REVISED HYPOTHESIS:'.",
            "Alter the rationales in the original hypothesis so that your answer on the "
            "altered hypothesis becomes <Complement>. Keep the changes to a minimum. The "
            "altered hypothesis should start with 'ALTERED HYPOTHESIS:'.",
            "Now, identify the 'rationales' behind your answer. The rationales are words, "
            "phrases or sentences in the original hypothesis that led you to answer with "
            "<Original Answer>. Share a list of rationales with one rationale per line. The "
            "list should start with 'RATIONALES:'.",
            {{"{PREMISE}", "premise"}, {"{HYPOTHESIS}", "hypothesis"}},
        },
    }};
    return sets;
}

const PromptSet& prompt_set(const std::string& task_id) {
    for (const auto& s : prompt_sets()) {
        if (s.task_id == task_id) return s;
    }
    throw std::invalid_argument("no prompt templates for task: " + task_id);
}

std::string replace_all(std::string text, std::string_view token, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

std::string fill_fields(std::string_view tmpl, const PromptSet& set, const Example& example) {
    std::string text(tmpl);
    for (const auto& [token, field] : set.slots) {
        auto it = example.fields.find(std::string(field));
        if (it == example.fields.end())
            throw std::invalid_argument("example " + example.example_id + " lacks field '" +
                                        std::string(field) + "'");
        text = replace_all(std::move(text), token, it->second);
    }
    return text;
}

std::string_view step1_template(const PromptSet& set, Strategy strategy) {
    return strategy == Strategy::cot ? set.step1_cot : set.step1_direct;
}

}  // namespace

std::string prediction_to_string(const PredictionValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    return std::to_string(std::get<std::int64_t>(v));
}

TargetLabel pick_target(const LabelSpace& space, const PredictionValue& prediction, Rng& rng) {
    if (space.is_discrete()) {
        const std::string& pred = std::get<std::string>(prediction);
        if (!space.contains(pred))
            throw std::invalid_argument("prediction '" + pred + "' outside the label space");
        std::vector<std::string> complement;
        for (const auto& l : space.labels) {
            if (l != pred) complement.push_back(l);
        }
        if (complement.empty())
            throw std::domain_error("label space of size 1 has no counterfactual target");
        return {PredictionValue(complement[rng.uniform_index(complement.size())]), prediction};
    }
    std::int64_t pred = std::get<std::int64_t>(prediction);
    std::int64_t epsilon = rng.uniform_int(1, 10);
    return {PredictionValue(pred + epsilon), prediction};
}

Conversation render_step1(const TaskSpec& task, const Example& example, Strategy strategy) {
    const PromptSet& set = prompt_set(task.task_id);
    Conversation conv;
    conv.push_user(fill_fields(step1_template(set, strategy), set, example));
    return conv;
}

std::string render_rationale_request(const TaskSpec& task, const PredictionValue& prediction) {
    const PromptSet& set = prompt_set(task.task_id);
    return replace_all(std::string(set.rationale_request), kOriginalAnswerSlot,
                       prediction_to_string(prediction));
}

Conversation render_sce_request(const TaskSpec& task, Strategy strategy, const TargetLabel& target,
                                Conversation prior) {
    if (prior.empty() || prior.ends_with_user())
        throw std::invalid_argument("SCE request requires a prior ending with the model's answer");
    if (strategy == Strategy::rationale_based && prior.size() < 4)
        throw std::invalid_argument("rationale_based SCE request requires the rationale exchange");
    const PromptSet& set = prompt_set(task.task_id);
    std::string_view tmpl =
        strategy == Strategy::rationale_based ? set.sce_rationale : set.sce_direct;
    prior.push_user(replace_all(std::string(tmpl), kComplementSlot, target.value_text()));
    return prior;
}

Conversation render_repredict(const TaskSpec& task, Strategy strategy, const std::string& sce_text,
                              const Example& example, const std::optional<Conversation>& context) {
    if (sce_text.empty()) throw std::invalid_argument("empty SCE text");
    Example revised = example;
    revised.fields[task.sce_field] = sce_text;
    const PromptSet& set = prompt_set(task.task_id);
    std::string turn = fill_fields(step1_template(set, strategy), set, revised);
    if (!context) {
        Conversation conv;
        conv.push_user(std::move(turn));
        return conv;
    }
    Conversation conv = *context;
    conv.push_user(std::move(turn));
    return conv;
}

std::vector<PromptTemplate> all_prompt_templates() {
    std::vector<PromptTemplate> out;
    for (const auto& set : prompt_sets()) {
        const std::string task(set.task_id);
        out.push_back({task + ".unconstrained.step1", std::string(set.step1_direct)});
        out.push_back({task + ".unconstrained.step2", std::string(set.sce_direct)});
        out.push_back({task + ".rationale_based.step1", std::string(set.step1_direct)});
        out.push_back({task + ".rationale_based.step2", std::string(set.rationale_request)});
        out.push_back({task + ".rationale_based.step3", std::string(set.sce_rationale)});
        out.push_back({task + ".cot.step1", std::string(set.step1_cot)});
        out.push_back({task + ".cot.step2", std::string(set.sce_direct)});
    }
    return out;
}

}  // namespace sce
