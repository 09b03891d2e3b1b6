#include "sce/ingest.hpp"

#include <cctype>
#include <fstream>
#include <map>

#include <json.hpp>

namespace sce {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
    throw IngestError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

Example parse_record(const json& j, const TaskSpec& task, const std::filesystem::path& path,
                     std::size_t line_no) {
    if (!j.is_object()) fail_line(path, line_no, "record is not a JSON object");
    Example ex;
    if (!j.contains("example_id") || !j["example_id"].is_string())
        fail_line(path, line_no, "missing string field 'example_id'");
    ex.example_id = j["example_id"].get<std::string>();
    if (!j.contains("fields") || !j["fields"].is_object())
        fail_line(path, line_no, "missing object field 'fields'");
    for (const auto& [k, v] : j["fields"].items()) {
        if (!v.is_string()) fail_line(path, line_no, "field '" + k + "' is not a string");
        ex.fields[k] = v.get<std::string>();
    }
    for (const auto& name : task.field_names) {
        auto it = ex.fields.find(name);
        if (it == ex.fields.end() || it->second.empty())
            fail_line(path, line_no, "missing required field '" + name + "'");
    }
    if (j.contains("gold") && !j["gold"].is_null()) {
        const json& g = j["gold"];
        if (task.label_space.is_discrete()) {
            if (!g.is_string())
                fail_line(path, line_no, "gold label must be a string for task " + task.task_id);
            std::string label = g.get<std::string>();
            if (!task.label_space.contains(label))
                fail_line(path, line_no, "gold label '" + label + "' outside the label space");
            ex.gold = GoldValue(label);
        } else {
            if (!g.is_number_integer())
                fail_line(path, line_no, "gold label must be an integer for task " + task.task_id);
            std::int64_t v = g.get<std::int64_t>();
            if (v < 1) fail_line(path, line_no, "gold integer must be >= 1");
            ex.gold = GoldValue(v);
        }
    }
    return ex;
}

}  // namespace

std::vector<Example> load_jsonl(const std::filesystem::path& path, const TaskSpec& task) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    std::vector<Example> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail_line(path, line_no, "malformed JSON");
        out.push_back(parse_record(j, task, path, line_no));
    }
    return out;
}

std::string example_to_jsonl_line(const Example& example) {
    json j;
    j["example_id"] = example.example_id;
    j["fields"] = json::object();
    for (const auto& [k, v] : example.fields) j["fields"][k] = v;
    if (example.gold) {
        if (std::holds_alternative<std::string>(*example.gold))
            j["gold"] = std::get<std::string>(*example.gold);
        else
            j["gold"] = std::get<std::int64_t>(*example.gold);
    }
    return j.dump();
}

void save_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    for (const auto& ex : examples) out << example_to_jsonl_line(ex) << "\n";
}

std::vector<Example> select_subset(const std::vector<Example>& examples, const TaskSpec& task,
                                   int per_class) {
    if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
    std::vector<Example> out;
    if (task.label_space.is_discrete()) {
        std::map<std::string, int> taken;
        for (const auto& ex : examples) {
            if (!ex.gold) continue;  // unlabeled rows cannot be assigned to a class
            const std::string key = gold_to_string(*ex.gold);
            if (taken[key] < per_class) {
                ++taken[key];
                out.push_back(ex);
            }
        }
    } else {
        for (const auto& ex : examples) {
            if (static_cast<int>(out.size()) >= per_class) break;
            out.push_back(ex);
        }
    }
    return out;
}

std::string strip_urls(std::string_view text) {
    auto is_scheme_at = [&](std::size_t i) {
        static constexpr std::string_view http = "http://";
        static constexpr std::string_view https = "https://";
        return text.substr(i, http.size()) == http || text.substr(i, https.size()) == https;
    };
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_scheme_at(i)) {
            std::size_t end = i;
            while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
            // swallow whitespace on both sides of the removed URL
            while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
            while (end < text.size() && std::isspace(static_cast<unsigned char>(text[end]))) ++end;
            if (!out.empty() && end < text.size()) out.push_back(' ');
            i = end;
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

DemographicSubstitution substitute_demographics(const std::map<std::string, std::string>& fields) {
    static const std::vector<std::pair<std::string, std::string>> placeholders = {
        {"[GENDER]", "female"}, {"[RACE]", "white"}, {"[AGE]", "20"}};
    DemographicSubstitution result;
    for (const auto& [name, text] : fields) {
        std::string value = text;
        bool touched = false;
        for (const auto& [token, replacement] : placeholders) {
            std::size_t pos = 0;
            while ((pos = value.find(token, pos)) != std::string::npos) {
                value.replace(pos, token.size(), replacement);
                pos += replacement.size();
                touched = true;
            }
        }
        if (!touched) result.untouched_fields.push_back(name);
        result.fields[name] = std::move(value);
    }
    return result;
}

Example preprocess_example(const TaskSpec& task, Example example) {
    if (task.task_id == "twitter") {
        for (auto& [name, text] : example.fields) text = strip_urls(text);
    } else if (task.task_id == "discrimeval") {
        example.fields = substitute_demographics(example.fields).fields;
    }
    return example;
}

}  // namespace sce
