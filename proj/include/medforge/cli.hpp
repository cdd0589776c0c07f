#pragma once

// Command-line entry point: one subcommand per pipeline stage, a shared JSON
// config, explicit seeds, atomic artifact writes, and a manifest per run so
// every output is traceable to its inputs.

#include <CLI11.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medforge/arena.hpp"
#include "medforge/config.hpp"
#include "medforge/corpus_io.hpp"
#include "medforge/decontam.hpp"
#include "medforge/ingest.hpp"
#include "medforge/panel_stats.hpp"
#include "medforge/profiler.hpp"
#include "medforge/synthgen.hpp"
#include "medforge/util.hpp"
#include "medforge/version.hpp"

namespace medforge::cli {

struct Manifest {
    std::string stage;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
    std::optional<uint64_t> seed;
    std::vector<std::string> artifacts;

    Json to_json() const {
        Json j{{"tool", "medforge"},
               {"tool_version", kToolVersion},
               {"format_version", kCorpusFormatVersion},
               {"stage", stage},
               {"config_hash", config_hash},
               {"inputs", input_hashes},
               {"artifacts", artifacts}};
        if (seed) j["seed"] = *seed;
        return j;
    }
};

namespace detail {

class StageLog {
public:
    void event(Json e) { events_.push_back(std::move(e)); }

    void event(const std::string& stage, const std::string& id, const std::string& outcome) {
        events_.push_back(Json{{"stage", stage}, {"id", id}, {"outcome", outcome}});
    }

    std::string render() const {
        std::string out;
        for (const Json& e : events_) out += e.dump() + "\n";
        return out;
    }

private:
    std::vector<Json> events_;
};

inline void write_json(const std::string& path, const Json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

inline void finish_stage(const std::string& primary_out, Manifest manifest, const StageLog& log) {
    const std::string log_path = primary_out + ".log.jsonl";
    atomic_write_file(log_path, log.render());
    manifest.artifacts.push_back(log_path);
    write_json(primary_out + ".manifest.json", manifest.to_json());
}

inline std::string hash_input(const std::string& path) { return "sha256:" + sha256_file_hex(path); }

inline Manifest start_manifest(const std::string& stage, const RunConfig& cfg) {
    Manifest m;
    m.stage = stage;
    if (!cfg.path.empty()) m.config_hash = hash_input(cfg.path);
    return m;
}

// Request context of a record: system and user turns before the first
// assistant turn.
inline std::vector<ReqMessage> prompt_messages(const ChatRecord& r) {
    std::vector<ReqMessage> out;
    for (const Message& m : r.messages) {
        if (m.role == Role::assistant) break;
        out.push_back(ReqMessage{m.role == Role::system ? ReqRole::system : ReqRole::user, m.content});
    }
    return out;
}

inline SynthOptions synth_options_from(const RunConfig& cfg) {
    SynthOptions opts;
    opts.max_attempts = cfg.get_or<int>("synth.max_attempts", opts.max_attempts);
    opts.temperature = cfg.get_or<double>("synth.temperature", opts.temperature);
    opts.date = cfg.get_or<std::string>("synth.date", opts.date);
    opts.reasoning = cfg.get_or<std::string>("synth.reasoning", opts.reasoning);
    opts.review_every = cfg.get_or<int>("synth.review_every", opts.review_every);
    opts.max_in_flight = cfg.get_or<int>("synth.max_in_flight", opts.max_in_flight);
    opts.target_count = cfg.get_or<int>("synth.target_count", opts.target_count);
    opts.monitor.letters = cfg.get_or<std::string>("synth.monitor_letters", opts.monitor.letters);
    opts.monitor.threshold = cfg.get_or<double>("synth.monitor_threshold", opts.monitor.threshold);
    opts.monitor.min_window = cfg.get_or<long>("synth.monitor_min_window", opts.monitor.min_window);
    return opts;
}

inline ProfilerOptions profiler_options_from(const RunConfig& cfg) {
    ProfilerOptions opts;
    opts.axes = cfg.get_or<std::vector<std::string>>("profiler.axes", opts.axes);
    opts.temperature = cfg.get_or<double>("profiler.temperature", opts.temperature);
    opts.max_in_flight = cfg.get_or<int>("profiler.max_in_flight", opts.max_in_flight);
    if (const Json* vocab = cfg.find("profiler.vocab")) {
        for (auto it = vocab->begin(); it != vocab->end(); ++it) {
            opts.vocab[it.key()] = it.value().get<std::vector<std::string>>();
        }
    }
    if (const Json* templates = cfg.find("profiler.prompt_templates")) {
        for (auto it = templates->begin(); it != templates->end(); ++it) {
            opts.prompt_templates[it.key()] = it.value().get<std::string>();
        }
    }
    return opts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage implementations

inline void stage_ingest(const RunConfig& cfg, const std::string& spec_name,
                         const std::string& out_path) {
    const Json* d = cfg.find("datasets." + spec_name);
    if (!d) throw ConfigError("datasets." + spec_name, "is required");
    SourceSpec spec;
    spec.dataset_name = d->value("dataset_name", spec_name);
    spec.schema = *source_schema_from_string((*d)["schema"].get<std::string>());
    spec.input_path = cfg.resolve_path((*d)["input_path"].get<std::string>());
    spec.split = d->value("split", std::string("train"));
    if (d->contains("expected_count")) spec.expected_count = (*d)["expected_count"].get<long>();

    detail::StageLog log;
    Manifest manifest = detail::start_manifest("ingest", cfg);
    manifest.input_hashes[spec.input_path] = detail::hash_input(spec.input_path);

    IngestReport report;
    if (spec.schema == SourceSchema::guideline_corpus) {
        DefaultTokenizer tokenizer;
        std::vector<GuidelineDoc> docs;
        report = ingest_guidelines(spec, tokenizer, [&](GuidelineDoc&& doc) {
            log.event("ingest", doc.id, "emitted");
            docs.push_back(std::move(doc));
        });
        write_guideline_corpus(docs, out_path);
    } else {
        CorpusWriter writer(out_path);
        report = ingest_dataset(spec, [&](ChatRecord&& r) {
            log.event("ingest", r.id, "emitted");
            writer.write(r);
        });
        writer.commit();
    }
    const std::string report_path = out_path + ".report.json";
    detail::write_json(report_path, report.to_json());
    manifest.artifacts = {out_path, report_path};
    detail::finish_stage(out_path, std::move(manifest), log);
}

inline DecontamReport stage_decontam(const RunConfig& cfg, const std::string& corpus_path,
                                     const std::vector<std::string>& ref_paths, double tau, int n,
                                     const std::string& out_path, const std::string& report_path) {
    if (tau < 0.0 || tau > 1.0) throw ConfigError("decontam.tau", "must be in [0, 1]");
    if (n < 2) throw ConfigError("decontam.n", "must be an integer >= 2");
    auto tokenizer = make_tokenizer(cfg.get_or<std::string>("decontam.tokenizer", DefaultTokenizer::kId));

    std::vector<std::pair<std::string, std::string>> refs;
    for (const std::string& path : ref_paths) {
        const std::string base = std::filesystem::path(path).filename().string();
        size_t line_no = 0;
        for (const std::string& line : split_lines(read_file(path))) {
            ++line_no;
            if (trim_view(line).empty()) continue;
            refs.emplace_back(base + "#" + std::to_string(line_no), line);
        }
    }
    ReferenceIndex index = build_index(refs, n, *tokenizer);

    detail::StageLog log;
    Manifest manifest = detail::start_manifest("decontam", cfg);
    manifest.input_hashes[corpus_path] = detail::hash_input(corpus_path);
    for (const std::string& path : ref_paths) {
        manifest.input_hashes[path] = detail::hash_input(path);
    }

    DecontamReport report;
    {
        CorpusReader reader(corpus_path);
        CorpusWriter writer(out_path);
        while (auto record = reader.next()) {
            DecontamDecision d = screen(*record, index, tau, *tokenizer);
            ++report.scanned;
            switch (d.stage) {
                case DecontamStage::clean:
                    ++report.clean;
                    writer.write(*record);
                    break;
                case DecontamStage::flagged_retained:
                    ++report.flagged_retained;
                    writer.write(*record);
                    break;
                case DecontamStage::removed:
                    ++report.removed;
                    report.removals.push_back(DecontamReport::Removal{
                        record->id,
                        index.reference_names[static_cast<size_t>(*d.matched_reference_id)],
                        *d.alignment_score, d.matched_gram});
                    break;
            }
            log.event("decontam", record->id, to_string(d.stage));
        }
        writer.commit();
    }
    detail::write_json(report_path, report.to_json());
    manifest.artifacts = {out_path, report_path};
    detail::finish_stage(out_path, std::move(manifest), log);
    return report;
}

inline void stage_synth(const RunConfig& cfg, const std::string& component,
                        const std::string& pool_path, const std::string& out_path,
                        const std::string& teacher_override, std::optional<uint64_t> seed_override,
                        std::optional<int> target_override) {
    auto comp = synth_component_from_string(component == "curated" ? "curated_qa"
                                            : component == "guidelines" ? "guidelines_qa"
                                                                        : component);
    if (!comp) throw ConfigError("synth.component", "must be curated|guidelines|moove");

    SynthOptions opts = detail::synth_options_from(cfg);
    opts.component = *comp;
    opts.seed = seed_override ? *seed_override : cfg.require_seed("synth");
    if (target_override) opts.target_count = *target_override;
    opts.teacher_model = teacher_override.empty() ? endpoint_model(cfg, "teacher") : teacher_override;
    auto gateway = make_gateway(cfg, "teacher");

    Manifest manifest = detail::start_manifest("synth", cfg);
    manifest.seed = opts.seed;
    manifest.input_hashes[pool_path] = detail::hash_input(pool_path);

    SynthResult result;
    if (*comp == SynthComponent::guidelines_qa) {
        result = run_guidelines(read_guideline_corpus(pool_path), opts, *gateway);
    } else {
        std::vector<ChatRecord> pool = read_corpus(pool_path);
        result = *comp == SynthComponent::curated_qa ? run_curated(pool, opts, *gateway)
                                                     : run_moove(pool, opts, *gateway);
    }

    write_corpus(result.records, out_path);
    detail::StageLog log;
    for (const SynthJobLog& jl : result.logs) {
        Json e{{"stage", "synth"},
               {"id", "job/" + std::to_string(jl.job)},
               {"outcome", jl.outcome},
               {"attempts", jl.attempts}};
        if (!jl.detail.empty()) e["detail"] = jl.detail;
        log.event(std::move(e));
    }
    const std::string report_path = out_path + ".report.json";
    const std::string review_path = out_path + ".review.md";
    detail::write_json(report_path, result.report_json());
    atomic_write_file(review_path, review_bundle_markdown(result));
    manifest.artifacts = {out_path, report_path, review_path};
    detail::finish_stage(out_path, std::move(manifest), log);
}

inline void stage_profile(const RunConfig& cfg, const std::string& source_path,
                          const std::string& synthetic_path, const std::vector<std::string>& axes,
                          const std::string& out_dir) {
    ProfilerOptions opts = detail::profiler_options_from(cfg);
    if (!axes.empty()) opts.axes = axes;
    opts.annotator_model = endpoint_model(cfg, "annotator");
    auto gateway = make_gateway(cfg, "annotator");

    std::vector<ChatRecord> source = read_corpus(source_path);
    std::vector<ChatRecord> synthetic = read_corpus(synthetic_path);
    if (source.empty() || synthetic.empty()) {
        throw Error("profile requires non-empty source and synthetic corpora");
    }
    AnnotateReport src_report = annotate(source, opts, *gateway);
    AnnotateReport syn_report = annotate(synthetic, opts, *gateway);
    DriftReport drift = drift_report(source, synthetic, opts.axes);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string report_path = (fs::path(out_dir) / "drift_report.json").string();
    const std::string csv_path = (fs::path(out_dir) / "histograms.csv").string();
    const std::string src_out = (fs::path(out_dir) / "source_annotated.jsonl").string();
    const std::string syn_out = (fs::path(out_dir) / "synthetic_annotated.jsonl").string();

    detail::write_json(report_path, Json{{"drift", drift.to_json()},
                                         {"source_annotation", src_report.to_json()},
                                         {"synthetic_annotation", syn_report.to_json()}});
    atomic_write_file(csv_path, drift.to_csv());
    write_corpus(source, src_out);
    write_corpus(synthetic, syn_out);

    detail::StageLog log;
    for (const ChatRecord& r : source) log.event("profile", r.id, "annotated");
    for (const ChatRecord& r : synthetic) log.event("profile", r.id, "annotated");
    Manifest manifest = detail::start_manifest("profile", cfg);
    manifest.input_hashes[source_path] = detail::hash_input(source_path);
    manifest.input_hashes[synthetic_path] = detail::hash_input(synthetic_path);
    manifest.artifacts = {report_path, csv_path, src_out, syn_out};
    detail::finish_stage(report_path, std::move(manifest), log);
}

inline void stage_arena(const RunConfig& cfg, const std::string& prompts_path,
                        const std::string& model_a_key, const std::string& model_b_key,
                        const std::string& judge_key, std::optional<uint64_t> seed_override,
                        const std::string& out_dir) {
    const uint64_t seed = seed_override ? *seed_override : cfg.require_seed("arena");
    const double judge_temp = cfg.get_or<double>("arena.temperature", 0.0);
    const double response_temp = cfg.get_or<double>("arena.response_temperature", 0.0);
    const int max_in_flight = cfg.get_or<int>("arena.max_in_flight", 4);
    const int parse_retries = cfg.get_or<int>("arena.parse_retries", 2);

    std::vector<ChatRecord> prompts = read_corpus(prompts_path);
    if (prompts.empty()) throw Error("arena requires a non-empty prompt corpus");

    auto gw_a = make_gateway(cfg, model_a_key);
    auto gw_b = make_gateway(cfg, model_b_key);
    auto gw_judge = make_gateway(cfg, judge_key);
    const std::string model_a = endpoint_model(cfg, model_a_key);
    const std::string model_b = endpoint_model(cfg, model_b_key);
    const std::string judge_model = endpoint_model(cfg, judge_key);

    auto generate = [&](Gateway& gw, const std::string& model,
                        const char* tag) -> std::vector<ModelResponse> {
        std::vector<ChatRequest> reqs;
        reqs.reserve(prompts.size());
        for (const ChatRecord& r : prompts) {
            ChatRequest req;
            req.model = model;
            req.temperature = response_temp;
            req.seed_tag = std::string("arena/") + tag + "/" + r.id;
            req.messages = detail::prompt_messages(r);
            reqs.push_back(std::move(req));
        }
        auto responses = complete_many(gw, reqs, max_in_flight);
        std::sort(responses.begin(), responses.end(),
                  [](const IndexedResponse& a, const IndexedResponse& b) { return a.index < b.index; });
        std::vector<ModelResponse> out;
        out.reserve(prompts.size());
        for (const auto& ir : responses) {
            if (!ir.response.ok()) {
                throw Error("response generation failed for '" + prompts[ir.index].id +
                            "': " + ir.response.error);
            }
            out.push_back(ModelResponse{model, ir.response.text});
        }
        return out;
    };
    std::vector<ModelResponse> responses_a = generate(*gw_a, model_a, "a");
    std::vector<ModelResponse> responses_b = generate(*gw_b, model_b, "b");
    std::vector<PairTask> tasks = make_pair_tasks(prompts, responses_a, responses_b, seed);

    std::vector<std::pair<PairTask, JudgeVerdict>> verdicts(tasks.size());
    medforge::detail::parallel_jobs(
        static_cast<long>(tasks.size()), max_in_flight, [&](long i) {
            const PairTask& task = tasks[static_cast<size_t>(i)];
            verdicts[static_cast<size_t>(i)] = {
                task, judge_pair(task, judge_model, *gw_judge, judge_temp, parse_retries)};
        });

    PairwiseAggregate agg = aggregate(verdicts);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string agg_path = (fs::path(out_dir) / "aggregate.json").string();
    const std::string verdicts_path = (fs::path(out_dir) / "verdicts.jsonl").string();
    const std::string radar_path = (fs::path(out_dir) / "radar.csv").string();

    std::string verdict_lines;
    detail::StageLog log;
    for (const auto& [task, verdict] : verdicts) {
        Json line{{"item_id", task.prompt_id}, {"swap", task.swap}, {"parse_ok", verdict.parse_ok}};
        if (verdict.parse_ok) {
            Winner w = verdict.winner;
            if (task.swap && w != Winner::tie) {
                w = w == Winner::model1 ? Winner::model2 : Winner::model1;
            }
            line["verdict"] = to_string(w);  // model A frame
            Json scores = Json::object();
            const auto& criteria = judge_criteria();
            for (size_t c = 0; c < criteria.size(); ++c) {
                const auto [m1, m2] = verdict.scores[c];
                scores[criteria[c]] = Json::array({task.swap ? m2 : m1, task.swap ? m1 : m2});
            }
            line["scores"] = std::move(scores);
        } else {
            line["error"] = verdict.parse_error;
        }
        verdict_lines += line.dump() + "\n";
        log.event("arena", task.prompt_id, verdict.parse_ok ? "judged" : "invalid");
    }
    atomic_write_file(verdicts_path, verdict_lines);
    Json agg_json = agg.to_json();
    agg_json["delta_likert_chosen_minus_rejected"] = chosen_minus_rejected(verdicts);
    detail::write_json(agg_path, agg_json);
    atomic_write_file(radar_path, criterion_means_csv(verdicts));

    Manifest manifest = detail::start_manifest("arena", cfg);
    manifest.seed = seed;
    manifest.input_hashes[prompts_path] = detail::hash_input(prompts_path);
    manifest.artifacts = {agg_path, verdicts_path, radar_path};
    detail::finish_stage(agg_path, std::move(manifest), log);
}

inline void stage_mcqa(const RunConfig& cfg, const std::string& benchmark_path,
                       const std::string& model_key, const std::string& out_path) {
    auto gateway = make_gateway(cfg, model_key);
    const std::string model = endpoint_model(cfg, model_key);
    const int max_in_flight = cfg.get_or<int>("arena.max_in_flight", 4);
    std::vector<ChatRecord> benchmark = read_corpus(benchmark_path);
    McqaResult result = mcqa_eval(model, benchmark, *gateway, max_in_flight);

    detail::StageLog log;
    for (const auto& item : result.items) {
        log.event("mcqa", item.id, item.correct ? "correct" : "wrong");
    }
    detail::write_json(out_path, result.to_json());
    Manifest manifest = detail::start_manifest("mcqa", cfg);
    manifest.input_hashes[benchmark_path] = detail::hash_input(benchmark_path);
    manifest.artifacts = {out_path};
    detail::finish_stage(out_path, std::move(manifest), log);
}

inline void stage_validate_judge(const RunConfig& cfg, const std::string& panel_path,
                                 const std::string& judge_log_path, const std::string& mode_name,
                                 std::optional<uint64_t> seed_override, int resamples,
                                 const std::string& out_path) {
    TieMode mode;
    if (mode_name == "with_ties") mode = TieMode::with_ties;
    else if (mode_name == "no_ties") mode = TieMode::no_ties;
    else throw ConfigError("validate.mode", "must be with_ties|no_ties");
    const uint64_t seed = seed_override ? *seed_override : cfg.require_seed("bootstrap");
    const int min_triplets = cfg.get_or<int>("validate.min_triplets", 10);

    std::vector<PanelRating> panel = parse_panel_csv(read_file(panel_path));
    std::map<std::string, Verdict> judge;
    for (const std::string& line : split_lines(read_file(judge_log_path))) {
        if (trim_view(line).empty()) continue;
        Json e = Json::parse(line);
        if (!e.value("parse_ok", true)) continue;
        if (!e.contains("item_id") || !e.contains("verdict")) continue;
        auto v = verdict_from_string(e["verdict"].get<std::string>());
        if (!v) throw Error("judge log has invalid verdict for item " + e["item_id"].dump());
        judge[e["item_id"].get<std::string>()] = *v;
    }

    KappaReport report = panel_validate(panel, judge, mode, seed, resamples, min_triplets);
    detail::write_json(out_path, report.to_json());

    // Per-rater kappa histogram rows for plotting.
    std::string hist = "rater_id,kappa\n";
    for (const auto& [rater, kappa] : report.per_rater) {
        char row[160];
        std::snprintf(row, sizeof row, "%s,%.12g\n", rater.c_str(), kappa);
        hist += row;
    }
    const std::string hist_path = out_path + ".hist.csv";
    atomic_write_file(hist_path, hist);

    detail::StageLog log;
    log.event("validate-judge", "panel", "n_raters=" + std::to_string(report.n_raters_included));
    Manifest manifest = detail::start_manifest("validate-judge", cfg);
    manifest.seed = seed;
    manifest.input_hashes[panel_path] = detail::hash_input(panel_path);
    manifest.input_hashes[judge_log_path] = detail::hash_input(judge_log_path);
    manifest.artifacts = {out_path, hist_path};
    detail::finish_stage(out_path, std::move(manifest), log);
}

inline void stage_report(const std::vector<std::string>& inputs, const std::string& out_path) {
    Json summary = Json::object();
    Json artifacts = Json::array();
    for (const std::string& path : inputs) {
        Json entry{{"path", path}, {"sha256", sha256_file_hex(path)}};
        try {
            Json parsed = Json::parse(read_file(path));
            if (parsed.is_object() && parsed.contains("stage")) entry["stage"] = parsed["stage"];
            entry["content"] = parsed;
        } catch (const Json::parse_error&) {
            // non-JSON artifacts are listed by hash only
        }
        artifacts.push_back(std::move(entry));
    }
    summary["artifacts"] = std::move(artifacts);
    detail::write_json(out_path, summary);
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CLI::App app{"medforge: medical QA corpus construction and evaluation toolkit"};
    app.set_version_flag("--version", std::string("medforge ") + kToolVersion +
                                          " (corpus format " +
                                          std::to_string(kCorpusFormatVersion) + ")");
    std::string config_path;

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "normalize a source dataset into a corpus");
    std::string ingest_spec, ingest_out;
    ingest_cmd->add_option("--config", config_path, "run config JSON")->required();
    ingest_cmd->add_option("--spec", ingest_spec, "dataset section name")->required();
    ingest_cmd->add_option("--out", ingest_out, "output corpus path")->required();

    // decontam
    auto* decontam_cmd = app.add_subcommand("decontam", "remove benchmark-contaminated records");
    std::string dc_corpus, dc_out, dc_report;
    std::vector<std::string> dc_refs;
    double dc_tau = -1.0;
    int dc_n = 0;
    decontam_cmd->add_option("--config", config_path, "run config JSON");
    decontam_cmd->add_option("--corpus", dc_corpus, "input corpus")->required();
    decontam_cmd->add_option("--refs", dc_refs, "benchmark prompt files (one prompt per line)")
        ->required()
        ->expected(-1);
    decontam_cmd->add_option("--tau", dc_tau, "alignment threshold");
    decontam_cmd->add_option("--n", dc_n, "n-gram order");
    decontam_cmd->add_option("--out", dc_out, "clean corpus output")->required();
    decontam_cmd->add_option("--report", dc_report, "report JSON output")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "run a synthetic generation pipeline");
    std::string synth_component, synth_pool, synth_out, synth_teacher;
    std::optional<uint64_t> synth_seed;
    std::optional<int> synth_target;
    synth_cmd->add_option("--config", config_path, "run config JSON")->required();
    synth_cmd->add_option("--component", synth_component, "curated|guidelines|moove")->required();
    synth_cmd->add_option("--pool", synth_pool, "seed pool (corpus or guideline file)")->required();
    synth_cmd->add_option("--out", synth_out, "output corpus path")->required();
    synth_cmd->add_option("--teacher", synth_teacher, "teacher model override");
    synth_cmd->add_option("--seed", synth_seed, "seed override");
    synth_cmd->add_option("--target", synth_target, "generation job count override");

    // profile
    auto* profile_cmd = app.add_subcommand("profile", "annotate and compare distributions");
    std::string pf_source, pf_synth, pf_out, pf_axes;
    profile_cmd->add_option("--config", config_path, "run config JSON")->required();
    profile_cmd->add_option("--source", pf_source, "source corpus")->required();
    profile_cmd->add_option("--synthetic", pf_synth, "synthetic corpus")->required();
    profile_cmd->add_option("--axes", pf_axes, "comma-separated axis list");
    profile_cmd->add_option("--out", pf_out, "output directory")->required();

    // arena
    auto* arena_cmd = app.add_subcommand("arena", "pairwise judged comparison of two models");
    std::string ar_prompts, ar_out;
    std::string ar_model_a = "model_a", ar_model_b = "model_b", ar_judge = "judge";
    std::optional<uint64_t> ar_seed;
    arena_cmd->add_option("--config", config_path, "run config JSON")->required();
    arena_cmd->add_option("--prompts", ar_prompts, "prompt corpus")->required();
    arena_cmd->add_option("--model-a", ar_model_a, "endpoint key for model A");
    arena_cmd->add_option("--model-b", ar_model_b, "endpoint key for model B");
    arena_cmd->add_option("--judge", ar_judge, "endpoint key for the judge");
    arena_cmd->add_option("--seed", ar_seed, "seed override");
    arena_cmd->add_option("--out", ar_out, "output directory")->required();

    // mcqa
    auto* mcqa_cmd = app.add_subcommand("mcqa", "multiple-choice accuracy harness");
    std::string mc_benchmark, mc_out, mc_model = "model_under_test";
    mcqa_cmd->add_option("--config", config_path, "run config JSON")->required();
    mcqa_cmd->add_option("--benchmark", mc_benchmark, "benchmark corpus (mcq records)")->required();
    mcqa_cmd->add_option("--model", mc_model, "endpoint key for the model under test");
    mcqa_cmd->add_option("--out", mc_out, "result JSON output")->required();

    // validate-judge
    auto* validate_cmd = app.add_subcommand("validate-judge", "score the judge against a human panel");
    std::string vj_panel, vj_log, vj_out, vj_mode = "with_ties";
    std::optional<uint64_t> vj_seed;
    int vj_resamples = 10000;
    validate_cmd->add_option("--config", config_path, "run config JSON");
    validate_cmd->add_option("--panel", vj_panel, "panel CSV (rater_id,item_id,verdict)")->required();
    validate_cmd->add_option("--judge-log", vj_log, "arena per-item verdict log")->required();
    validate_cmd->add_option("--mode", vj_mode, "with_ties|no_ties");
    validate_cmd->add_option("--seed", vj_seed, "bootstrap seed override");
    validate_cmd->add_option("--resamples", vj_resamples, "bootstrap resample count");
    validate_cmd->add_option("--out", vj_out, "report JSON output")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "merge run artifacts into one summary");
    std::vector<std::string> rp_inputs;
    std::string rp_out;
    report_cmd->add_option("--inputs", rp_inputs, "artifact files")->required()->expected(-1);
    report_cmd->add_option("--out", rp_out, "summary JSON output")->required();

    app.require_subcommand(0, 1);

    try {
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        // Usage errors share the config-violation exit code.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto load = [&]() -> RunConfig {
            if (config_path.empty()) return RunConfig{};
            return load_config(config_path);
        };
        if (*ingest_cmd) {
            stage_ingest(load(), ingest_spec, ingest_out);
        } else if (*decontam_cmd) {
            RunConfig cfg = load();
            const double tau = dc_tau >= 0.0 ? dc_tau : cfg.get_or<double>("decontam.tau", 0.5);
            const int n = dc_n > 0 ? dc_n : cfg.get_or<int>("decontam.n", 8);
            stage_decontam(cfg, dc_corpus, dc_refs, tau, n, dc_out, dc_report);
        } else if (*synth_cmd) {
            stage_synth(load(), synth_component, synth_pool, synth_out, synth_teacher, synth_seed,
                        synth_target);
        } else if (*profile_cmd) {
            std::vector<std::string> axes;
            if (!pf_axes.empty()) {
                size_t start = 0;
                while (start <= pf_axes.size()) {
                    size_t comma = pf_axes.find(',', start);
                    axes.push_back(trim(pf_axes.substr(
                        start, comma == std::string::npos ? comma : comma - start)));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
            stage_profile(load(), pf_source, pf_synth, axes, pf_out);
        } else if (*arena_cmd) {
            stage_arena(load(), ar_prompts, ar_model_a, ar_model_b, ar_judge, ar_seed, ar_out);
        } else if (*mcqa_cmd) {
            stage_mcqa(load(), mc_benchmark, mc_model, mc_out);
        } else if (*validate_cmd) {
            stage_validate_judge(load(), vj_panel, vj_log, vj_mode, vj_seed, vj_resamples, vj_out);
        } else if (*report_cmd) {
            stage_report(rp_inputs, rp_out);
        } else {
            std::fprintf(stderr, "%s", app.help().c_str());
            return 2;
        }
    } catch (const ConfigError& e) {
        // One structured error line per failure.
        std::fprintf(stderr, "%s\n",
                     Json{{"error", "config"}, {"field", e.field()}, {"message", e.what()}}
                         .dump()
                         .c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n",
                     Json{{"error", "stage"}, {"message", e.what()}}.dump().c_str());
        return 1;
    }
    return 0;
}

}  // namespace medforge::cli
