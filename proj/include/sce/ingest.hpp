#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sce/tasks.hpp"

namespace sce {

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loads one Example per line from the canonical JSONL schema
// {example_id, fields{...}, gold?}. Fails fast on the first bad line,
// reporting its 1-based line number.
std::vector<Example> load_jsonl(const std::filesystem::path& path, const TaskSpec& task);

// Canonical serialization (alphabetical keys, compact separators); a
// canonical-form file round-trips through load_jsonl byte-identically.
std::string example_to_jsonl_line(const Example& example);
void save_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples);

// First `per_class` examples of each gold class in original order for
// discrete tasks; the first `per_class` examples overall for integer
// tasks. Classes with fewer examples are kept whole.
std::vector<Example> select_subset(const std::vector<Example>& examples, const TaskSpec& task,
                                   int per_class);

// Removes http(s)://... substrings, collapsing the whitespace around each
// removal to a single space. Text without URLs passes through unchanged.
std::string strip_urls(std::string_view text);

struct DemographicSubstitution {
    std::map<std::string, std::string> fields;
    // fields where no placeholder occurred, for caller-side reporting
    std::vector<std::string> untouched_fields;
};

// Replaces the [GENDER]/[RACE]/[AGE] placeholders with the fixed values
// female / white / 20, every occurrence.
DemographicSubstitution substitute_demographics(const std::map<std::string, std::string>& fields);

// Task-conditional preprocessing applied between load and run:
// twitter inputs get URL stripping, discrimeval inputs get the fixed
// demographic substitution.
Example preprocess_example(const TaskSpec& task, Example example);

}  // namespace sce
