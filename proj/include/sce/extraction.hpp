#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sce/tasks.hpp"

namespace sce {

// A model answer after post-processing. Unparseable is a value, not an
// error: downstream accounting needs to count these cases.
struct ParsedAnswer {
    enum class Kind { label, integer, unparseable };
    Kind kind = Kind::unparseable;
    std::string label;        // kind == label, canonical spelling
    std::int64_t number = 0;  // kind == integer
    std::string raw;          // the text handed to the parser

    bool parsed() const { return kind != Kind::unparseable; }
    std::variant<std::string, std::int64_t> value() const;
    bool operator==(const ParsedAnswer&) const = default;
};

struct FilterOutcome {
    enum class Reason { ok, too_short, no_cue, stopword_only, empty };
    bool kept = false;
    Reason reason = Reason::empty;

    bool operator==(const FilterOutcome&) const = default;
};

std::string_view filter_reason_name(FilterOutcome::Reason r);

inline constexpr std::string_view kAnswerCue = "ANSWER:";
inline constexpr std::string_view kRationalesCue = "RATIONALES:";

// Trims whitespace, then strips the characters {*, \, ', ., !, ?} from
// both ends (which covers the '. and .. sequences). Interior text is
// untouched; the result is a fixed point of the function.
std::string normalize_answer(std::string_view text);

// The trimmed segment after the LAST occurrence of `cue` (matched
// case-insensitively); nullopt when the cue never occurs.
std::optional<std::string> extract_after_cue(std::string_view text, std::string_view cue);

// Label match is case-insensitive on the normalized text; integers take
// the first integer token, allowing comma grouping ("1,234").
ParsedAnswer parse_answer(std::string_view text, const LabelSpace& space);

// Full answer path for a raw model reply: take the segment after the last
// ANSWER: cue when present (FINAL ANSWER: ends with it), otherwise parse
// the whole reply, which handles bare answers like "48".
ParsedAnswer parse_model_answer(std::string_view raw, const LabelSpace& space);

// The SCE segment after the (task, strategy) cue, with a trailing
// ANSWER:/FINAL ANSWER: tag stripped when the model embedded its answer.
std::optional<std::string> extract_sce(std::string_view text, const TaskSpec& task,
                                       Strategy strategy);

FilterOutcome filter_sce(const std::optional<std::string>& sce_text, const TaskSpec& task);

// Non-empty trimmed lines after RATIONALES:, or nullopt when the cue is
// missing or the list is empty (such cases are dropped upstream).
std::optional<std::vector<std::string>> extract_rationales(std::string_view text);

// Whitespace-delimited word count, the unit of the short-SCE filter.
int count_words(std::string_view text);

}  // namespace sce
