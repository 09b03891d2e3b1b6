#include "sce/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace sce {

namespace {

using nlohmann::json;

json gold_to_json(const std::optional<GoldValue>& gold) {
    if (!gold) return nullptr;
    if (std::holds_alternative<std::string>(*gold)) return std::get<std::string>(*gold);
    return std::get<std::int64_t>(*gold);
}

std::optional<GoldValue> gold_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) return GoldValue(j.get<std::string>());
    return GoldValue(j.get<std::int64_t>());
}

json parsed_to_json(const ParsedAnswer& p) {
    switch (p.kind) {
        case ParsedAnswer::Kind::label:
            return json{{"kind", "label"}, {"value", p.label}};
        case ParsedAnswer::Kind::integer:
            return json{{"kind", "integer"}, {"value", p.number}};
        case ParsedAnswer::Kind::unparseable:
            return json{{"kind", "unparseable"}};
    }
    throw std::logic_error("bad ParsedAnswer kind");
}

ParsedAnswer parsed_from_json(const json& j, const std::string& raw) {
    ParsedAnswer p;
    p.raw = raw;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "label") {
        p.kind = ParsedAnswer::Kind::label;
        p.label = j.at("value").get<std::string>();
    } else if (kind == "integer") {
        p.kind = ParsedAnswer::Kind::integer;
        p.number = j.at("value").get<std::int64_t>();
    }
    return p;
}

json prediction_to_json(const PredictionValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    return std::get<std::int64_t>(v);
}

PredictionValue prediction_from_json(const json& j) {
    if (j.is_string()) return PredictionValue(j.get<std::string>());
    return PredictionValue(j.get<std::int64_t>());
}

std::string iso_timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

}  // namespace

int default_trials(double temperature, Strategy strategy) {
    if (temperature == 0.0) return 1;
    return strategy == Strategy::cot ? 3 : 5;
}

json RunConfig::to_json() const {
    return json{{"task_id", task_id},
                {"strategy", std::string(strategy_name(strategy))},
                {"temperature", temperature},
                {"trials", trials},
                {"seed", seed},
                {"subset_per_class", subset_per_class},
                {"dataset_path", dataset_path},
                {"backend", backend.to_json()},
                {"gen", gen.to_json()},
                {"wall_clock_timestamps", wall_clock_timestamps}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.task_id = j.at("task_id").get<std::string>();
    c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    c.temperature = j.value("temperature", 0.0);
    c.trials = j.contains("trials") ? j["trials"].get<int>()
                                    : default_trials(c.temperature, c.strategy);
    c.seed = j.value("seed", std::uint64_t{0});
    c.subset_per_class = j.value("subset_per_class", 250);
    c.dataset_path = j.value("dataset_path", std::string());
    c.backend = BackendConfig::from_json(j.at("backend"));
    if (j.contains("gen")) c.gen = GenConfig::from_json(j["gen"]);
    c.gen.temperature = c.temperature;
    c.wall_clock_timestamps = j.value("wall_clock_timestamps", false);
    c.validate();
    return c;
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

void RunConfig::validate() const {
    task_by_id(task_id);  // throws on unknown task
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (subset_per_class < 1) throw std::invalid_argument("subset_per_class must be >= 1");
    if (gen.temperature != temperature)
        throw std::invalid_argument("gen.temperature must mirror the run temperature");
}

json RunRecord::to_json() const {
    json j{{"example_id", example_id}, {"trial", trial}, {"seq", seq},
           {"failed", failed},         {"gold", gold_to_json(gold)},
           {"sce_source", sce_source}, {"latency_s", latency_s}};
    if (failed) j["failure"] = failure;
    if (step1) {
        j["step1"] = json{{"messages", step1->conversation.to_json()},
                          {"raw", step1->raw},
                          {"parsed", parsed_to_json(step1->parsed)}};
    }
    if (target) {
        j["target"] = json{{"value", prediction_to_json(target->value)},
                           {"source_prediction", prediction_to_json(target->source_prediction)}};
    }
    if (rationale_raw) j["rationale_raw"] = *rationale_raw;
    if (rationales) j["rationales"] = *rationales;
    if (step2) {
        json js{{"messages", step2->conversation.to_json()},
                {"raw", step2->raw},
                {"filter",
                 json{{"kept", step2->filter.kept},
                      {"reason", std::string(filter_reason_name(step2->filter.reason))}}}};
        if (step2->sce) js["sce"] = *step2->sce;
        j["step2"] = js;
    }
    if (step3_with)
        j["step3_with"] = json{{"raw", step3_with->raw}, {"parsed", parsed_to_json(step3_with->parsed)}};
    if (step3_without)
        j["step3_without"] =
            json{{"raw", step3_without->raw}, {"parsed", parsed_to_json(step3_without->parsed)}};
    if (started_at) j["started_at"] = *started_at;
    if (finished_at) j["finished_at"] = *finished_at;
    return j;
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    r.example_id = j.at("example_id").get<std::string>();
    r.trial = j.at("trial").get<int>();
    r.seq = j.value("seq", std::uint64_t{0});
    r.failed = j.value("failed", false);
    r.failure = j.value("failure", std::string());
    r.gold = gold_from_json(j.value("gold", json()));
    r.sce_source = j.value("sce_source", std::string());
    r.latency_s = j.value("latency_s", 0.0);
    if (j.contains("step1")) {
        StepTrace t;
        t.conversation = Conversation::from_json(j["step1"].at("messages"));
        t.raw = j["step1"].at("raw").get<std::string>();
        t.parsed = parsed_from_json(j["step1"].at("parsed"), t.raw);
        r.step1 = std::move(t);
    }
    if (j.contains("target")) {
        TargetLabel t{prediction_from_json(j["target"].at("value")),
                      prediction_from_json(j["target"].at("source_prediction"))};
        r.target = std::move(t);
    }
    if (j.contains("rationale_raw")) r.rationale_raw = j["rationale_raw"].get<std::string>();
    if (j.contains("rationales")) r.rationales = j["rationales"].get<std::vector<std::string>>();
    if (j.contains("step2")) {
        SceTrace t;
        t.conversation = Conversation::from_json(j["step2"].at("messages"));
        t.raw = j["step2"].at("raw").get<std::string>();
        if (j["step2"].contains("sce")) t.sce = j["step2"]["sce"].get<std::string>();
        t.filter.kept = j["step2"].at("filter").at("kept").get<bool>();
        std::string reason = j["step2"].at("filter").at("reason").get<std::string>();
        for (auto rr : {FilterOutcome::Reason::ok, FilterOutcome::Reason::too_short,
                        FilterOutcome::Reason::no_cue, FilterOutcome::Reason::stopword_only,
                        FilterOutcome::Reason::empty}) {
            if (filter_reason_name(rr) == reason) t.filter.reason = rr;
        }
        r.step2 = std::move(t);
    }
    auto load_repredict = [&](const char* key) -> std::optional<RepredictTrace> {
        if (!j.contains(key)) return std::nullopt;
        RepredictTrace t;
        t.raw = j[key].at("raw").get<std::string>();
        t.parsed = parsed_from_json(j[key].at("parsed"), t.raw);
        return t;
    };
    r.step3_with = load_repredict("step3_with");
    r.step3_without = load_repredict("step3_without");
    if (j.contains("started_at")) r.started_at = j["started_at"].get<std::string>();
    if (j.contains("finished_at")) r.finished_at = j["finished_at"].get<std::string>();
    return r;
}

RunStore RunStore::create(const std::filesystem::path& path, const RunConfig& config) {
    RunStore store;
    store.path_ = path;
    store.config_ = config;
    store.config_hash_ = config.hash();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create store " + path.string());
    out << json{{"sce_store", 1}, {"config", config.to_json()}, {"config_hash", store.config_hash_}}
               .dump()
        << "\n";
    return store;
}

RunStore RunStore::open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open store " + path.string());
    RunStore store;
    store.path_ = path;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("store is empty: " + path.string());
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("sce_store"))
        throw std::runtime_error("store header missing: " + path.string());
    store.config_ = RunConfig::from_json(header.at("config"));
    store.config_hash_ = header.at("config_hash").get<std::string>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            store.truncated_tail_ = true;  // interrupted mid-append
            break;
        }
        store.records_.push_back(RunRecord::from_json(j));
    }
    return store;
}

void RunStore::append(const RunRecord& record) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to store " + path_.string());
    out << record.to_json().dump() << "\n";
    out.flush();
    records_.push_back(record);
}

namespace {

struct PipelineContext {
    const RunConfig& config;
    const TaskSpec& task;
    ChatBackend& backend;
};

// One (example, trial): Step 1, target selection, optional rationale
// exchange, Step 2 with extraction and filtering, then both Step-3
// conditions. Backend errors mark the record failed and end it early.
RunRecord process_one(const PipelineContext& ctx, const Example& example, int trial,
                      std::uint64_t seq) {
    RunRecord rec;
    rec.example_id = example.example_id;
    rec.trial = trial;
    rec.seq = seq;
    rec.gold = example.gold;
    rec.sce_source = example.fields.at(ctx.task.sce_field);
    if (ctx.config.wall_clock_timestamps) rec.started_at = iso_timestamp_now();

    auto finish = [&](RunRecord r) {
        if (ctx.config.wall_clock_timestamps) r.finished_at = iso_timestamp_now();
        return r;
    };
    auto fail = [&](RunRecord r, const CompletionResult& c, const char* step) {
        r.failed = true;
        r.failure = std::string(step) + ": " + std::string(error_kind_name(c.error_kind)) +
                    (c.error_message.empty() ? "" : " (" + c.error_message + ")");
        return finish(std::move(r));
    };

    const LabelSpace& space = ctx.task.label_space;

    Conversation conv1 = render_step1(ctx.task, example, ctx.config.strategy);
    CompletionResult r1 = ctx.backend.complete(conv1, ctx.config.gen);
    rec.latency_s += r1.latency_s;
    if (!r1.ok()) return fail(std::move(rec), r1, "step1");
    rec.step1 = StepTrace{conv1, r1.text, parse_model_answer(r1.text, space)};
    if (!rec.step1->parsed.parsed()) return finish(std::move(rec));

    // the target stream hangs off (seed, example) alone, so all trials of
    // one example aim at the same counterfactual label
    Rng target_rng = derive_rng(ctx.config.seed, example.example_id);
    rec.target = pick_target(space, rec.step1->parsed.value(), target_rng);

    Conversation prior = conv1;
    prior.push_assistant(r1.text);

    if (ctx.config.strategy == Strategy::rationale_based) {
        Conversation rconv = prior;
        rconv.push_user(render_rationale_request(ctx.task, rec.step1->parsed.value()));
        CompletionResult rr = ctx.backend.complete(rconv, ctx.config.gen);
        rec.latency_s += rr.latency_s;
        if (!rr.ok()) return fail(std::move(rec), rr, "rationale");
        rec.rationale_raw = rr.text;
        rec.rationales = extract_rationales(rr.text);
        if (!rec.rationales) return finish(std::move(rec));  // dropped: no usable rationales
        prior = rconv;
        prior.push_assistant(rr.text);
    }

    Conversation conv2 = render_sce_request(ctx.task, ctx.config.strategy, *rec.target, prior);
    CompletionResult r2 = ctx.backend.complete(conv2, ctx.config.gen);
    rec.latency_s += r2.latency_s;
    if (!r2.ok()) return fail(std::move(rec), r2, "step2");
    std::optional<std::string> sce = extract_sce(r2.text, ctx.task, ctx.config.strategy);
    FilterOutcome filter = filter_sce(sce, ctx.task);
    rec.step2 = SceTrace{conv2, r2.text, sce, filter};
    if (!filter.kept) return finish(std::move(rec));

    Conversation full_context = conv2;
    full_context.push_assistant(r2.text);
    Conversation conv3w =
        render_repredict(ctx.task, ctx.config.strategy, *sce, example, full_context);
    CompletionResult r3w = ctx.backend.complete(conv3w, ctx.config.gen);
    rec.latency_s += r3w.latency_s;
    if (!r3w.ok()) return fail(std::move(rec), r3w, "step3_with");
    rec.step3_with = RepredictTrace{r3w.text, parse_model_answer(r3w.text, space)};

    Conversation conv3o =
        render_repredict(ctx.task, ctx.config.strategy, *sce, example, std::nullopt);
    CompletionResult r3o = ctx.backend.complete(conv3o, ctx.config.gen);
    rec.latency_s += r3o.latency_s;
    if (!r3o.ok()) return fail(std::move(rec), r3o, "step3_without");
    rec.step3_without = RepredictTrace{r3o.text, parse_model_answer(r3o.text, space)};

    return finish(std::move(rec));
}

// Runs tasks [first_index, total) over a worker pool and appends results
// to the store strictly in canonical order.
void execute_range(const PipelineContext& ctx, const std::vector<Example>& examples,
                   RunStore& store, std::size_t first_index) {
    const std::size_t trials = static_cast<std::size_t>(ctx.config.trials);
    const std::size_t total = examples.size() * trials;
    if (first_index >= total) return;

    std::atomic<std::size_t> next_task{first_index};
    std::mutex mu;
    std::map<std::size_t, RunRecord> ready;
    std::size_t next_write = first_index;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            std::size_t index = next_task.fetch_add(1);
            if (index >= total) return;
            {
                std::lock_guard lock(mu);
                if (error) return;
            }
            try {
                const Example& ex = examples[index / trials];
                int trial = static_cast<int>(index % trials);
                RunRecord rec = process_one(ctx, ex, trial, index);
                std::lock_guard lock(mu);
                ready.emplace(index, std::move(rec));
                // drain every record that is next in canonical order
                while (!ready.empty() && ready.begin()->first == next_write) {
                    store.append(ready.begin()->second);
                    ready.erase(ready.begin());
                    ++next_write;
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    unsigned pool = std::min<std::size_t>(
        std::max(1, ctx.config.backend.max_in_flight), total - first_index);
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    if (next_write != total)
        throw std::runtime_error("pipeline did not complete all records");
}

}  // namespace

RunStore run_pipeline(const RunConfig& config, const std::vector<Example>& examples,
                      ChatBackend& backend, const std::filesystem::path& out_path) {
    config.validate();
    const TaskSpec& task = task_by_id(config.task_id);
    for (const auto& ex : examples) {
        for (const auto& name : task.field_names) {
            if (!ex.fields.count(name))
                throw std::invalid_argument("example " + ex.example_id + " lacks field " + name);
        }
    }
    RunStore store = RunStore::create(out_path, config);
    PipelineContext ctx{config, task, backend};
    execute_range(ctx, examples, store, 0);
    return store;
}

RunStore resume_pipeline(const std::filesystem::path& store_path, const RunConfig& config,
                         const std::vector<Example>& examples, ChatBackend& backend) {
    config.validate();
    RunStore existing = RunStore::open(store_path);
    if (existing.config_hash() != config.hash())
        throw std::runtime_error("config hash mismatch: store " + existing.config_hash() +
                                 " vs current " + config.hash());

    const TaskSpec& task = task_by_id(config.task_id);
    const std::size_t trials = static_cast<std::size_t>(config.trials);
    const auto& done = existing.records();
    if (done.size() > examples.size() * trials)
        throw std::runtime_error("store has more records than the dataset allows");
    // records are written in canonical order, so what exists must be a
    // prefix of the canonical (example, trial) sequence
    for (std::size_t i = 0; i < done.size(); ++i) {
        const Example& ex = examples[i / trials];
        if (done[i].example_id != ex.example_id ||
            done[i].trial != static_cast<int>(i % trials))
            throw std::runtime_error("store records do not match the dataset order");
    }

    if (existing.had_truncated_tail()) {
        // rewrite without the partial final line before appending
        RunStore clean = RunStore::create(store_path, config);
        for (const auto& r : done) clean.append(r);
        existing = std::move(clean);
    }

    PipelineContext ctx{config, task, backend};
    execute_range(ctx, examples, existing, done.size());
    return existing;
}

}  // namespace sce
