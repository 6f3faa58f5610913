#include "ptk/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptk/corpus/blend.hpp"
#include "ptk/corpus/document.hpp"
#include "ptk/corpus/shards.hpp"
#include "ptk/model/param_io.hpp"
#include "ptk/tokenizer/bpe.hpp"
#include "ptk/train/throughput.hpp"
#include "ptk/train/toy_trainer.hpp"
#include "ptk/util/errors.hpp"
#include "ptk/util/rng.hpp"
#include "run_manifest.hpp"

namespace ptk::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    bool json = false;
    std::string replay;
};

struct TokenizerTrainArgs {
    std::string input;
    std::size_t vocab_size = 0;
};

struct EncodeArgs {
    std::string tokenizer;
    std::string input;
    std::string blend;
    std::size_t shard_size = 0;
    std::uint64_t token_budget = 0;
    bool no_eos = false;
};

struct BlendPlanArgs {
    std::size_t draws = 100000;
};

struct TrainToyArgs {
    std::string shards;
};

struct EvalArgs {
    std::string checkpoint;
    std::string model_config;
    std::string shards;
    std::size_t window = 0;
};

// What a command produced; the dispatcher prints and records it.
struct Outcome {
    std::string text;
    ojson data = ojson::object();
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json config_or_empty(const Common& c) { return c.config.empty() ? json::object() : read_json_file(c.config); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot write " + path.string());
    out << text;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, x);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome tokenizer_train(const Common& c, const TokenizerTrainArgs& a, RunManifest& m) {
    const json cfg = config_or_empty(c);
    BpeTrainOptions opt;
    opt.vocab_target = a.vocab_size ? a.vocab_size : cfg.value("vocab_target", std::size_t{512});
    opt.upsample = cfg.value("upsample", std::map<std::string, double>{});

    std::vector<SourceText> corpus;
    for (auto& d : read_jsonl_documents(a.input)) corpus.push_back({std::move(d.text), std::move(d.source)});
    m.add_input("corpus", a.input);

    const auto model = train_bpe(corpus, opt);
    const auto path = (fs::path(c.out) / "tokenizer.json").string();
    model.save(path);
    m.add_output(path);

    Outcome o;
    o.data = {{"vocab_size", model.size()}, {"merges", model.merges().size()}, {"documents", corpus.size()},
              {"tokenizer", path}};
    o.text = "trained tokenizer: " + std::to_string(model.size()) + " tokens, " +
             std::to_string(model.merges().size()) + " merges -> " + path + "\n";
    return o;
}

// Blend over the sources present in the corpus, weighted by document count.
BlendSpec blend_from_docs(const std::vector<Document>& docs) {
    std::map<std::string, std::map<std::string, double>> counts;
    for (const auto& d : docs) counts[d.category][d.source] += 1.0;
    std::vector<BlendCategory> cats;
    for (const auto& [cat, leaves] : counts) {
        BlendCategory bc{cat, 0.0, {}};
        for (const auto& [leaf, n] : leaves) {
            bc.leaves.push_back({leaf, n});
            bc.weight += n;
        }
        cats.push_back(std::move(bc));
    }
    if (cats.empty()) throw PipelineError("encode: empty corpus");
    return BlendSpec(std::move(cats));
}

Outcome encode(const Common& c, const EncodeArgs& a, RunManifest& m) {
    const json cfg = config_or_empty(c);
    const auto tokenizer = TokenizerModel::load(a.tokenizer);
    m.add_input("tokenizer", a.tokenizer);

    auto docs = read_jsonl_documents(a.input);
    m.add_input("documents", a.input);
    for (auto& d : docs) {
        if (d.source.empty()) d.source = "default";
        if (d.category.empty()) d.category = d.source;
    }

    BlendSpec blend;
    if (!a.blend.empty()) {
        blend = BlendSpec::load(a.blend);
        m.add_input("blend", a.blend);
    } else if (cfg.contains("blend")) {
        blend = BlendSpec::from_json(cfg["blend"].dump());
    } else {
        blend = blend_from_docs(docs);
    }

    ShardOptions opt;
    opt.seed = c.seed;
    opt.shard_size = a.shard_size ? a.shard_size : cfg.value("shard_size", std::size_t{1} << 20);
    opt.token_budget = a.token_budget ? a.token_budget : cfg.value("token_budget", std::uint64_t{0});
    opt.append_eos = !a.no_eos && cfg.value("append_eos", true);
    if (opt.shard_size == 0) throw ConfigError("encode: shard_size must be >= 1");

    const auto manifest = build_shards(docs, tokenizer, blend, opt, c.out);
    for (const auto& s : manifest.shards) m.add_output((fs::path(c.out) / s.file).string());
    m.add_output((fs::path(c.out) / "manifest.json").string());

    Outcome o;
    o.data = {{"documents", docs.size()},
              {"tokens", manifest.total_tokens},
              {"shards", manifest.shards.size()},
              {"per_leaf_counts", manifest.per_leaf_counts},
              {"unblended_docs", manifest.unblended_docs}};
    o.text = "encoded " + std::to_string(docs.size()) + " documents -> " + std::to_string(manifest.total_tokens) +
             " tokens in " + std::to_string(manifest.shards.size()) + " shard(s) under " + c.out + "\n";
    for (const auto& [leaf, n] : manifest.per_leaf_counts) o.text += "  " + leaf + ": " + std::to_string(n) + "\n";
    return o;
}

Outcome curate_cmd(const Common& c, const std::string& input, RunManifest& m) {
    const json cfg = config_or_empty(c);
    CurateOptions opt;
    opt.exact_dedup = cfg.value("exact_dedup", true);
    opt.near_dedup = cfg.value("near_dedup", true);
    opt.quality_filter = cfg.value("quality_filter", true);
    if (cfg.contains("near")) {
        const auto& n = cfg["near"];
        opt.near.num_hashes = n.value("num_hashes", opt.near.num_hashes);
        opt.near.shingle_len = n.value("shingle_len", opt.near.shingle_len);
        opt.near.bands = n.value("bands", opt.near.bands);
        opt.near.rows = n.value("rows", opt.near.rows);
        opt.near.threshold = n.value("threshold", opt.near.threshold);
    }
    opt.near.seed = c.seed;
    if (cfg.contains("quality")) {
        const auto& q = cfg["quality"];
        auto& t = opt.quality;
        t.min_words = q.value("min_words", t.min_words);
        t.max_words = q.value("max_words", t.max_words);
        t.min_mean_word_length = q.value("min_mean_word_length", t.min_mean_word_length);
        t.max_mean_word_length = q.value("max_mean_word_length", t.max_mean_word_length);
        t.max_symbol_ratio = q.value("max_symbol_ratio", t.max_symbol_ratio);
        t.max_bullet_line_fraction = q.value("max_bullet_line_fraction", t.max_bullet_line_fraction);
        t.max_duplicate_line_fraction = q.value("max_duplicate_line_fraction", t.max_duplicate_line_fraction);
    }

    auto docs = read_jsonl_documents(input);
    m.add_input("documents", input);
    const auto result = curate(std::move(docs), opt);

    const auto curated = (fs::path(c.out) / "curated.jsonl").string();
    write_jsonl_documents(curated, result.docs);
    m.add_output(curated);

    const auto& s = result.stats;
    ojson report;
    report["input_docs"] = s.input_docs;
    report["kept_docs"] = result.docs.size();
    report["exact_removed"] = s.exact_removed;
    report["near_removed"] = s.near_removed;
    report["filtered"] = s.filtered;
    report["fired_rules"] = s.fired_rules;
    report["near_clusters"] = s.near_report.near_clusters;
    report["jaccard_threshold"] = s.near_report.jaccard_threshold;
    report["candidate_pairs"] = s.near_report.candidate_pairs;
    const auto report_path = (fs::path(c.out) / "curate_report.json").string();
    write_text(report_path, report.dump(2) + "\n");
    m.add_output(report_path);

    Outcome o;
    o.data = report;
    o.text = "curated " + std::to_string(s.input_docs) + " -> " + std::to_string(result.docs.size()) +
             " documents (exact " + std::to_string(s.exact_removed) + ", near " + std::to_string(s.near_removed) +
             ", filtered " + std::to_string(s.filtered) + ")\n";
    for (const auto& [rule, n] : s.fired_rules) o.text += "  " + rule + ": " + std::to_string(n) + "\n";
    return o;
}

ojson sample_table(const BlendSpec& blend, Rng rng, std::size_t draws, std::string& text, const std::string& label) {
    BlendSampler sampler(blend, std::move(rng));
    std::map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < draws; ++i) counts[sampler.leaf_name(sampler.next())]++;
    ojson rows = ojson::array();
    for (const auto& [leaf, w] : blend.leaf_weights()) {
        const double got = static_cast<double>(counts[leaf]) / static_cast<double>(draws);
        rows.push_back({{"leaf", leaf}, {"category", *blend.category_of(leaf)}, {"weight", w}, {"sampled", got}});
        char line[256];
        std::snprintf(line, sizeof(line), "%-20s %-20s %-16s %8.4f %8.4f\n", label.c_str(), leaf.c_str(),
                      blend.category_of(leaf)->c_str(), w, got);
        text += line;
    }
    return rows;
}

Outcome blend_plan(const Common& c, const BlendPlanArgs& a, RunManifest&) {
    if (c.config.empty()) throw UsageError("blend-plan requires --config (a blend or train plan)");
    if (a.draws == 0) throw UsageError("--draws must be >= 1");
    const json cfg = read_json_file(c.config);
    const Rng root(c.seed);

    Outcome o;
    char head[256];
    std::snprintf(head, sizeof(head), "%-20s %-20s %-16s %8s %8s\n", "phase", "leaf", "category", "weight",
                  "sampled");
    o.text = head;
    o.data["draws"] = a.draws;
    auto phases = ojson::array();
    if (cfg.contains("ramp")) {
        const auto plan = TrainPlan::from_json(cfg.dump());
        const std::uint64_t end = plan.pretrain_tokens() + plan.continued.tokens;
        const std::uint64_t starts[] = {0, plan.continued.switch_tokens, plan.continued.second_start()};
        const std::uint64_t stops[] = {plan.continued.switch_tokens, plan.continued.second_start(),
                                       std::max(end, plan.continued.second_start())};
        for (int i = 0; i < 3; ++i) {
            if (stops[i] <= starts[i]) continue;
            const Phase ph = phase_at(plan, starts[i]);
            const std::string name = to_string(ph);
            ojson p;
            p["phase"] = name;
            p["start_tokens"] = starts[i];
            p["end_tokens"] = stops[i];
            p["leaves"] = sample_table(phase_blend(plan, starts[i]), root.fork(name), a.draws, o.text, name);
            phases.push_back(std::move(p));
        }
    } else {
        const auto blend = BlendSpec::from_json(cfg.dump());
        ojson p;
        p["phase"] = "blend";
        p["leaves"] = sample_table(blend, root.fork("blend"), a.draws, o.text, "blend");
        phases.push_back(std::move(p));
    }
    o.data["phases"] = std::move(phases);
    return o;
}

Outcome throughput(const Common& c, RunManifest&) {
    const auto cfg = c.config.empty() ? ThroughputConfig::reference() : ThroughputConfig::load(c.config);
    const auto report = throughput_report(cfg);
    Outcome o;
    o.text = report.to_text();
    o.data = ojson::parse(report.to_json());
    return o;
}

TrainPlan plan_from(const json& cfg) {
    if (!cfg.contains("plan")) throw ConfigError("train config needs a \"plan\" object");
    return TrainPlan::from_json(cfg["plan"].dump());
}

Outcome train_toy_cmd(const Common& c, const TrainToyArgs& a, RunManifest& m) {
    if (c.config.empty()) throw UsageError("train-toy requires --config");
    const json cfg = read_json_file(c.config);
    const auto manifest = ShardManifest::load((fs::path(a.shards) / "manifest.json").string());
    const auto tokens = read_all_shards(manifest, a.shards);
    m.add_input("shards", a.shards);

    json model_json = cfg.value("model", json::object());
    if (!model_json.contains("vocab_size")) {
        std::uint64_t v = manifest.vocab_size;
        if (v == 0) v = tokens.empty() ? 1 : *std::max_element(tokens.begin(), tokens.end()) + 1u;
        model_json["vocab_size"] = v;
    }
    ToyTrainOptions opt;
    opt.model = model_config_from_json(model_json.dump());
    opt.plan = plan_from(cfg);
    opt.plan.derive_steps(opt.model);
    opt.seed = c.seed;
    opt.init_std = cfg.value("init_std", 0.02);
    if (cfg.contains("adam")) {
        opt.adam.beta1 = cfg["adam"].value("beta1", opt.adam.beta1);
        opt.adam.beta2 = cfg["adam"].value("beta2", opt.adam.beta2);
        opt.adam.eps = cfg["adam"].value("eps", opt.adam.eps);
    }
    const std::size_t window = cfg.value("window", opt.model.seq_len);
    const auto windows = make_windows(tokens, manifest.segments, window);
    const std::string precision = cfg.value("precision", std::string("double"));

    std::vector<LossPoint> curve;
    std::map<Phase, std::map<std::string, std::uint64_t>> draws;
    double train_loss = 0.0;
    const auto ckpt = (fs::path(c.out) / "checkpoint.nmt4").string();
    auto finish = [&](const auto& result, auto tag) {
        using Real = decltype(tag);
        curve = result.curve;
        draws = result.draws;
        train_loss = mean_window_loss<Real>(opt.model, result.params, windows);
        save_params(ckpt, result.params);
    };
    if (precision == "double") {
        finish(train_toy<double>(opt, windows), double{});
    } else if (precision == "float") {
        finish(train_toy<float>(opt, windows), float{});
    } else {
        throw ConfigError("precision must be \"double\" or \"float\"");
    }

    const auto curve_path = (fs::path(c.out) / "loss_curve.csv").string();
    const auto model_path = (fs::path(c.out) / "model_config.json").string();
    write_text(curve_path, loss_curve_csv(curve));
    save_model_config(model_path, opt.model);

    ojson summary;
    summary["steps"] = curve.size();
    summary["tokens_seen"] = curve.empty() ? 0 : curve.back().tokens_seen;
    summary["windows"] = windows.size();
    summary["final_step_loss"] = curve.empty() ? 0.0 : curve.back().loss;
    summary["train_loss"] = train_loss;
    summary["train_perplexity"] = std::exp(train_loss);
    summary["decay_steps"] = opt.plan.lr.decay_steps;
    summary["continued_steps"] = opt.plan.lr.continued_steps;
    ojson phase_json = ojson::object();
    for (const auto& [ph, leaves] : draws) phase_json[to_string(ph)] = leaves;
    summary["draws"] = std::move(phase_json);
    ojson phase_steps = ojson::object();
    for (const auto& p : curve) {
        auto& e = phase_steps[to_string(p.phase)];
        if (e.is_null()) e = {{"first_step", p.step}, {"last_step", p.step}};
        e["last_step"] = p.step;
    }
    summary["phase_steps"] = std::move(phase_steps);
    const auto summary_path = (fs::path(c.out) / "train_summary.json").string();
    write_text(summary_path, summary.dump(2) + "\n");

    for (const auto& p : {curve_path, ckpt, model_path, summary_path}) m.add_output(p);

    Outcome o;
    o.data = summary;
    o.text = "trained " + std::to_string(curve.size()) + " steps on " + std::to_string(windows.size()) +
             " windows; train loss " + fmt("%.4f", train_loss) + " (ppl " + fmt("%.4f", std::exp(train_loss)) +
             ")\n  checkpoint: " + ckpt + "\n  loss curve: " + curve_path + "\n";
    return o;
}

Outcome eval_ppl(const Common& c, const EvalArgs& a, RunManifest& m) {
    fs::path ckpt = a.checkpoint;
    fs::path model_path = a.model_config;
    if (fs::is_directory(ckpt)) {
        if (model_path.empty()) model_path = ckpt / "model_config.json";
        ckpt /= "checkpoint.nmt4";
    } else if (model_path.empty()) {
        model_path = ckpt.parent_path() / "model_config.json";
    }
    if (!fs::exists(ckpt)) throw UsageError("checkpoint not found: " + ckpt.string());
    if (!fs::exists(model_path)) throw UsageError("model config not found: " + model_path.string());
    const auto config = load_model_config(model_path.string());
    const auto params = load_params<double>(ckpt.string(), config);
    m.add_input("checkpoint", ckpt.string());
    m.add_input("model_config", model_path.string());

    const auto manifest = ShardManifest::load((fs::path(a.shards) / "manifest.json").string());
    const auto tokens = read_all_shards(manifest, a.shards);
    m.add_input("shards", a.shards);
    const auto windows = make_windows(tokens, manifest.segments, a.window ? a.window : config.seq_len);
    const double loss = mean_window_loss<double>(config, params, windows);
    std::uint64_t predictions = 0;
    for (const auto& w : windows) predictions += w.tokens.size() - 1;

    Outcome o;
    o.data = {{"perplexity", std::exp(loss)},
              {"loss", loss},
              {"windows", windows.size()},
              {"predictions", predictions}};
    const auto path = (fs::path(c.out) / "eval.json").string();
    write_text(path, o.data.dump(2) + "\n");
    m.add_output(path);
    o.text = "perplexity " + fmt("%.6f", std::exp(loss)) + " (loss " + fmt("%.6f", loss) + " over " +
             std::to_string(predictions) + " predictions)\n";
    return o;
}

// ---------------------------------------------------------------------------

void report_error(std::ostream& err, bool as_json, const std::string& type, const std::string& message,
                  int code, const std::string& usage = {}) {
    if (as_json) {
        ojson j;
        j["error"] = {{"type", type}, {"message", message}};
        j["exit_code"] = code;
        err << j.dump() << '\n';
    } else {
        err << "error: " << message << '\n';
        if (!usage.empty()) err << usage;
    }
}

bool wants_json(const std::vector<std::string>& args) {
    return std::find(args.begin(), args.end(), "--json") != args.end();
}

std::vector<std::string> replay_args(const std::string& manifest_path, const Common& c, bool out_given) {
    const json j = read_json_file(manifest_path);
    if (!j.contains("args") || !j["args"].is_array()) throw ConfigError("run manifest has no args: " + manifest_path);
    auto args = j["args"].get<std::vector<std::string>>();
    if (std::find(args.begin(), args.end(), "--replay") != args.end())
        throw ConfigError("run manifest records a replay");
    if (out_given) {
        // Drop any recorded --out and redirect.
        std::vector<std::string> kept;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out") {
                ++i;
                continue;
            }
            if (args[i].rfind("--out=", 0) == 0) continue;
            kept.push_back(args[i]);
        }
        args = std::move(kept);
        args.push_back("--out");
        args.push_back(c.out);
    }
    if (c.json && std::find(args.begin(), args.end(), "--json") == args.end()) args.push_back("--json");
    return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pre-training toolkit: tokenizer, corpus pipeline, throughput and toy training.", "ptk"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Common c;
    app.add_option("--config", c.config, "JSON config for the subcommand")->check(CLI::ExistingFile);
    app.add_option("--seed", c.seed, "Root seed (default 0)");
    auto* out_opt = app.add_option("--out", c.out, "Output directory (default .)");
    app.add_flag("--json", c.json, "Machine-readable stdout and error output");
    app.add_option("--replay", c.replay, "Re-run the invocation recorded in a run manifest")
        ->check(CLI::ExistingFile);

    TokenizerTrainArgs tk;
    auto* tok = app.add_subcommand("tokenizer-train", "Train a byte-level BPE tokenizer from JSONL text");
    tok->add_option("--input", tk.input, "JSONL corpus ({\"text\", \"source\"} per line)")
        ->required()
        ->check(CLI::ExistingFile);
    tok->add_option("--vocab-size", tk.vocab_size, "Target vocabulary size (overrides config vocab_target)");

    EncodeArgs en;
    auto* enc = app.add_subcommand("encode", "Encode documents into blended token shards");
    enc->add_option("--tokenizer", en.tokenizer, "Tokenizer JSON")->required()->check(CLI::ExistingFile);
    enc->add_option("--input", en.input, "JSONL documents")->required()->check(CLI::ExistingFile);
    enc->add_option("--blend", en.blend, "Blend JSON (default: document sources by count)")
        ->check(CLI::ExistingFile);
    enc->add_option("--shard-size", en.shard_size, "Tokens per shard file");
    enc->add_option("--token-budget", en.token_budget, "Sample exactly this many tokens from the blend");
    enc->add_flag("--no-eos", en.no_eos, "Do not append <eos> after each document");

    std::string curate_input;
    auto* cur = app.add_subcommand("curate", "Exact/near dedup and heuristic quality filtering");
    cur->add_option("--input", curate_input, "JSONL documents")->required()->check(CLI::ExistingFile);

    BlendPlanArgs bp;
    auto* bpl = app.add_subcommand("blend-plan", "Show target and sampled proportions of a blend or train plan");
    bpl->add_option("--draws", bp.draws, "Number of leaf draws per phase");

    auto* tpr = app.add_subcommand("throughput-report", "FLOPs, MFU and wall-clock for a batch-ramp schedule");

    TrainToyArgs tt;
    auto* trn = app.add_subcommand("train-toy", "Train a toy model through the ramp and continued phase");
    trn->add_option("--shards", tt.shards, "Directory written by encode")->required()->check(CLI::ExistingDirectory);

    EvalArgs ev;
    auto* evl = app.add_subcommand("eval-ppl", "Perplexity of a checkpoint on token shards");
    evl->add_option("--checkpoint", ev.checkpoint, "Checkpoint file or train-toy output directory")
        ->required()
        ->check(CLI::ExistingPath);
    evl->add_option("--model-config", ev.model_config, "Model config JSON (default: next to the checkpoint)")
        ->check(CLI::ExistingFile);
    evl->add_option("--shards", ev.shards, "Directory written by encode")->required()->check(CLI::ExistingDirectory);
    evl->add_option("--window", ev.window, "Evaluation window length (default seq_len)");

    std::vector<const char*> argv{"ptk"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::string message = e.what();
        if (!args.empty() && args.front().rfind('-', 0) != 0) {
            bool known = false;
            for (const auto* s : app.get_subcommands({})) known = known || s->get_name() == args.front();
            if (!known) message = "unknown subcommand '" + args.front() + "'";
        }
        report_error(err, c.json || wants_json(args), "usage", message, kExitUsage, app.help());
        return kExitUsage;
    }

    if (!c.replay.empty()) {
        if (!app.get_subcommands().empty()) {
            report_error(err, c.json, "usage", "--replay takes no subcommand", kExitUsage, app.help());
            return kExitUsage;
        }
        try {
            return run(replay_args(c.replay, c, out_opt->count() > 0), out, err);
        } catch (const std::exception& e) {
            report_error(err, c.json, "config", e.what(), kExitRuntime);
            return kExitRuntime;
        }
    }
    if (app.get_subcommands().empty()) {
        report_error(err, c.json, "usage", "a subcommand is required", kExitUsage, app.help());
        return kExitUsage;
    }
    const CLI::App* sub = app.get_subcommands().front();

    try {
        fs::create_directories(c.out);
        RunManifest manifest(sub->get_name(), args, c.seed);
        if (!c.config.empty()) manifest.set_config(c.config);

        Outcome o;
        if (sub == tok) o = tokenizer_train(c, tk, manifest);
        else if (sub == enc) o = encode(c, en, manifest);
        else if (sub == cur) o = curate_cmd(c, curate_input, manifest);
        else if (sub == bpl) o = blend_plan(c, bp, manifest);
        else if (sub == tpr) o = throughput(c, manifest);
        else if (sub == trn) o = train_toy_cmd(c, tt, manifest);
        else o = eval_ppl(c, ev, manifest);

        if (sub == bpl || sub == tpr) {
            const std::string stem = sub == bpl ? "blend_plan" : "throughput_report";
            const auto json_path = (fs::path(c.out) / (stem + ".json")).string();
            const auto text_path = (fs::path(c.out) / (stem + ".txt")).string();
            write_text(json_path, o.data.dump(2) + "\n");
            write_text(text_path, o.text);
            manifest.add_output(json_path);
            manifest.add_output(text_path);
        }
        manifest.extra() = o.data;
        manifest.write((fs::path(c.out) / "run_manifest.json").string());

        if (c.json) out << o.data.dump(2) << '\n';
        else out << o.text;
        return kExitOk;
    } catch (const UsageError& e) {
        report_error(err, c.json, "usage", e.what(), kExitUsage, sub->help());
        return kExitUsage;
    } catch (const ConfigError& e) {
        report_error(err, c.json, "config", e.what(), kExitRuntime);
    } catch (const InputError& e) {
        report_error(err, c.json, "input", e.what(), kExitRuntime);
    } catch (const DimensionError& e) {
        report_error(err, c.json, "dimension", e.what(), kExitRuntime);
    } catch (const PipelineError& e) {
        report_error(err, c.json, "pipeline", e.what(), kExitRuntime);
    } catch (const std::exception& e) {
        report_error(err, c.json, "runtime", e.what(), kExitRuntime);
    }
    return kExitRuntime;
}

}  // namespace ptk::cli
