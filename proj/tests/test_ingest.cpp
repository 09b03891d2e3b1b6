#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sce/ingest.hpp"

using namespace sce;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::trunc);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_jsonl reads records in file order") {
    auto path = write_temp(
        "sce_ingest_ok.jsonl",
        R"({"example_id": "a", "fields": {"review": "great fun"}, "gold": "Positive"})"
        "\n"
        R"({"example_id": "b", "fields": {"review": "dull"}, "gold": "Negative"})"
        "\n");
    auto examples = load_jsonl(path, task_by_id("sst2"));
    REQUIRE(examples.size() == 2);
    CHECK(examples[0].example_id == "a");
    CHECK(examples[1].example_id == "b");
    CHECK(std::get<std::string>(*examples[0].gold) == "Positive");
}

TEST_CASE("load_jsonl rejects labels outside the label space with a line number") {
    auto path = write_temp(
        "sce_ingest_badlabel.jsonl",
        R"({"example_id": "a", "fields": {"scenario": "s", "question": "q"}, "gold": "Maybe"})"
        "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, task_by_id("discrimeval")),
                         doctest::Contains(":1:"), IngestError);
}

TEST_CASE("load_jsonl fails fast on a malformed first line") {
    auto path = write_temp("sce_ingest_malformed.jsonl",
                           "not json\n"
                           R"({"example_id": "a", "fields": {"review": "x"}})"
                           "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, task_by_id("sst2")), doctest::Contains(":1:"),
                         IngestError);
}

TEST_CASE("load_jsonl reports missing required fields") {
    auto path = write_temp("sce_ingest_missing.jsonl",
                           R"({"example_id": "a", "fields": {"premise": "p"}})"
                           "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, task_by_id("mgnli")),
                         doctest::Contains("hypothesis"), IngestError);
}

TEST_CASE("load_jsonl validates integer gold for gsm8k") {
    auto path = write_temp("sce_ingest_goldint.jsonl",
                           R"({"example_id": "a", "fields": {"problem": "p"}, "gold": 0})"
                           "\n");
    CHECK_THROWS_AS(load_jsonl(path, task_by_id("gsm8k")), IngestError);
}

TEST_CASE("canonical-form files round-trip byte-identically") {
    const TaskSpec& task = task_by_id("mgnli");
    std::vector<Example> originals;
    for (int i = 0; i < 5; ++i) {
        Example ex;
        ex.example_id = "rt" + std::to_string(i);
        ex.fields["premise"] = "premise " + std::to_string(i);
        ex.fields["hypothesis"] = "hypothesis " + std::to_string(i);
        if (i % 2 == 0) ex.gold = GoldValue(std::string("Neutral"));
        originals.push_back(ex);
    }
    auto path = std::filesystem::temp_directory_path() / "sce_ingest_roundtrip.jsonl";
    save_jsonl(path, originals);
    std::string first_bytes;
    {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        first_bytes = buf.str();
    }
    auto loaded = load_jsonl(path, task);
    save_jsonl(path, loaded);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == first_bytes);
}

TEST_CASE("select_subset takes the first per_class examples of each class") {
    const TaskSpec& task = task_by_id("sst2");
    std::vector<Example> examples;
    for (int i = 0; i < 600; ++i) {
        Example ex;
        ex.example_id = "p" + std::to_string(i);
        ex.fields["review"] = "x";
        ex.gold = GoldValue(std::string(i % 2 == 0 ? "Positive" : "Negative"));
        examples.push_back(ex);
    }
    auto subset = select_subset(examples, task, 250);
    CHECK(subset.size() == 500);

    // three classes, 600 each, per_class 250 -> 750
    const TaskSpec& twitter = task_by_id("twitter");
    std::vector<Example> tw;
    for (int i = 0; i < 1800; ++i) {
        Example ex;
        ex.example_id = "t" + std::to_string(i);
        ex.fields["post"] = "x";
        ex.gold = GoldValue(twitter.label_space.labels[i % 3]);
        tw.push_back(ex);
    }
    CHECK(select_subset(tw, twitter, 250).size() == 750);
}

TEST_CASE("select_subset keeps small classes whole and preserves order") {
    const TaskSpec& task = task_by_id("sst2");
    std::vector<Example> examples;
    for (int i = 0; i < 10; ++i) {
        Example ex;
        ex.example_id = "e" + std::to_string(i);
        ex.fields["review"] = "x";
        ex.gold = GoldValue(std::string(i < 7 ? "Positive" : "Negative"));
        examples.push_back(ex);
    }
    auto subset = select_subset(examples, task, 250);
    REQUIRE(subset.size() == 10);
    for (std::size_t i = 0; i < subset.size(); ++i)
        CHECK(subset[i].example_id == examples[i].example_id);
}

TEST_CASE("select_subset is a prefix for integer tasks") {
    const TaskSpec& task = task_by_id("gsm8k");
    std::vector<Example> examples;
    for (int i = 0; i < 1000; ++i) {
        Example ex;
        ex.example_id = "g" + std::to_string(i);
        ex.fields["problem"] = "x";
        examples.push_back(ex);
    }
    auto subset = select_subset(examples, task, 250);
    REQUIRE(subset.size() == 250);
    CHECK(subset.front().example_id == "g0");
    CHECK(subset.back().example_id == "g249");
}

TEST_CASE("strip_urls removes URLs and collapses surrounding whitespace") {
    CHECK(strip_urls("AAPL up https://t.co/x today") == "AAPL up today");
    CHECK(strip_urls("no url here") == "no url here");
    CHECK(strip_urls("https://only.example/url") == "");
    CHECK(strip_urls("tail http://x.co") == "tail");
    CHECK(strip_urls("http://x.co lead") == "lead");
    CHECK(strip_urls("a http://x.co b https://y.co c") == "a b c");
    // pre-existing spacing away from the URL is untouched
    CHECK(strip_urls("keep  double space") == "keep  double space");
}

TEST_CASE("strip_urls is idempotent") {
    for (const char* t : {"AAPL up https://t.co/x today", "plain", "https://a.b c http://d.e"}) {
        std::string once = strip_urls(t);
        CHECK(strip_urls(once) == once);
    }
}

TEST_CASE("substitute_demographics fills the fixed values") {
    std::map<std::string, std::string> fields{
        {"scenario", "A [AGE]-year-old [RACE] [GENDER] applies."}, {"question", "Approve?"}};
    auto result = substitute_demographics(fields);
    CHECK(result.fields["scenario"] == "A 20-year-old white female applies.");
    REQUIRE(result.untouched_fields.size() == 1);
    CHECK(result.untouched_fields[0] == "question");
}

TEST_CASE("substitute_demographics replaces every occurrence") {
    std::map<std::string, std::string> fields{{"scenario", "[GENDER] and [GENDER]"}};
    CHECK(substitute_demographics(fields).fields["scenario"] == "female and female");
}

TEST_CASE("substitute_demographics leaves placeholder-free fields unchanged") {
    std::map<std::string, std::string> fields{{"scenario", "no placeholders"}};
    auto result = substitute_demographics(fields);
    CHECK(result.fields["scenario"] == "no placeholders");
    CHECK(result.untouched_fields == std::vector<std::string>{"scenario"});
}
