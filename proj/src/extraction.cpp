#include "sce/extraction.hpp"

#include <algorithm>
#include <cctype>

namespace sce {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool is_strip_char(char c) {
    return c == '*' || c == '\\' || c == '\'' || c == '.' || c == '!' || c == '?';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool equals_ci(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(),
                      [](char x, char y) { return lower(x) == lower(y); });
}

// Last case-insensitive occurrence of cue in text, or npos.
std::size_t rfind_ci(std::string_view text, std::string_view cue) {
    if (cue.empty() || cue.size() > text.size()) return std::string_view::npos;
    for (std::size_t start = text.size() - cue.size() + 1; start-- > 0;) {
        if (equals_ci(text.substr(start, cue.size()), cue)) return start;
    }
    return std::string_view::npos;
}

}  // namespace

std::string_view filter_reason_name(FilterOutcome::Reason r) {
    switch (r) {
        case FilterOutcome::Reason::ok: return "ok";
        case FilterOutcome::Reason::too_short: return "too_short";
        case FilterOutcome::Reason::no_cue: return "no_cue";
        case FilterOutcome::Reason::stopword_only: return "stopword_only";
        case FilterOutcome::Reason::empty: return "empty";
    }
    return "?";
}

std::variant<std::string, std::int64_t> ParsedAnswer::value() const {
    if (kind == Kind::label) return label;
    if (kind == Kind::integer) return number;
    throw std::logic_error("unparseable answer has no value");
}

std::string normalize_answer(std::string_view text) {
    std::string_view s = trim_view(text);
    for (;;) {
        std::string_view prev = s;
        while (!s.empty() && is_strip_char(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_strip_char(s.back())) s.remove_suffix(1);
        s = trim_view(s);
        if (s == prev) break;
    }
    return std::string(s);
}

std::optional<std::string> extract_after_cue(std::string_view text, std::string_view cue) {
    if (cue.empty()) throw std::invalid_argument("empty cue");
    std::size_t pos = rfind_ci(text, cue);
    if (pos == std::string_view::npos) return std::nullopt;
    return std::string(trim_view(text.substr(pos + cue.size())));
}

ParsedAnswer parse_answer(std::string_view text, const LabelSpace& space) {
    ParsedAnswer out;
    out.raw = std::string(text);
    std::string norm = normalize_answer(text);
    if (space.is_discrete()) {
        if (auto label = space.match_label(norm)) {
            out.kind = ParsedAnswer::Kind::label;
            out.label = *label;
        }
        return out;
    }
    // first integer token; commas allowed as digit-group separators
    for (std::size_t i = 0; i < norm.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(norm[i]))) continue;
        bool negative = i > 0 && norm[i - 1] == '-';
        std::string digits;
        std::size_t j = i;
        while (j < norm.size()) {
            char c = norm[j];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                digits.push_back(c);
                ++j;
            } else if (c == ',' && j + 1 < norm.size() &&
                       std::isdigit(static_cast<unsigned char>(norm[j + 1]))) {
                ++j;
            } else {
                break;
            }
        }
        try {
            out.number = std::stoll(negative ? "-" + digits : digits);
        } catch (const std::out_of_range&) {
            return out;  // absurdly long digit string: unparseable
        }
        out.kind = ParsedAnswer::Kind::integer;
        return out;
    }
    return out;
}

ParsedAnswer parse_model_answer(std::string_view raw, const LabelSpace& space) {
    std::optional<std::string> segment = extract_after_cue(raw, kAnswerCue);
    ParsedAnswer parsed = parse_answer(segment ? *segment : std::string(raw), space);
    parsed.raw = std::string(raw);
    return parsed;
}

std::optional<std::string> extract_sce(std::string_view text, const TaskSpec& task,
                                       Strategy strategy) {
    std::optional<std::string> segment = extract_after_cue(text, task.cue_for(strategy));
    if (!segment) return std::nullopt;
    // Some models restate their answer inside the SCE; drop the trailing
    // ANSWER:/FINAL ANSWER: tag and everything after it.
    std::size_t tag = rfind_ci(*segment, kAnswerCue);
    if (tag != std::string_view::npos) {
        static constexpr std::string_view kFinal = "FINAL ";
        std::string_view view(*segment);
        if (tag >= kFinal.size() && equals_ci(view.substr(tag - kFinal.size(), kFinal.size()), kFinal))
            tag -= kFinal.size();
        segment = std::string(trim_view(view.substr(0, tag)));
    }
    return segment;
}

int count_words(std::string_view text) {
    int words = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

FilterOutcome filter_sce(const std::optional<std::string>& sce_text, const TaskSpec& task) {
    if (!sce_text) return {false, FilterOutcome::Reason::no_cue};
    std::string_view s = trim_view(*sce_text);
    if (s.empty()) return {false, FilterOutcome::Reason::empty};
    bool any_alnum = std::any_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0;
    });
    if (!any_alnum) return {false, FilterOutcome::Reason::stopword_only};
    int words = count_words(s);
    if (task.short_filter_requires_alpha_only) {
        static constexpr std::string_view math_chars = "0123456789+-*/=<>^%";
        bool has_math = std::any_of(s.begin(), s.end(), [&](char c) {
            return math_chars.find(c) != std::string_view::npos;
        });
        if (words < task.min_words_filter && !has_math)
            return {false, FilterOutcome::Reason::too_short};
    } else if (words < task.min_words_filter) {
        return {false, FilterOutcome::Reason::too_short};
    }
    return {true, FilterOutcome::Reason::ok};
}

std::optional<std::vector<std::string>> extract_rationales(std::string_view text) {
    std::optional<std::string> segment = extract_after_cue(text, kRationalesCue);
    if (!segment) return std::nullopt;
    std::vector<std::string> lines;
    std::string_view rest(*segment);
    while (!rest.empty()) {
        std::size_t nl = rest.find('\n');
        std::string_view line = trim_view(rest.substr(0, nl));
        if (!line.empty()) lines.emplace_back(line);
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    if (lines.empty()) return std::nullopt;
    return lines;
}

}  // namespace sce
