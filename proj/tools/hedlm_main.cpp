#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hedlm/batch.hpp"
#include "hedlm/dataset.hpp"
#include "hedlm/eval.hpp"
#include "hedlm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string dataset_path;
    std::string out = "out";
    std::string method = "hedlm";
    std::vector<std::string> users;  // empty: all
    std::string scorer = "mock";
    std::string profile;  // "", "paramA", "paramB"
    std::string dk_file;
    hedlm::PipelineConfig pipeline;
};

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hedlm::Error("cli", "cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw hedlm::Error("cli", "config file is not valid JSON: " + std::string(e.what()));
    }
    auto get = [&](const char* key, auto& slot) {
        if (doc.contains(key)) doc.at(key).get_to(slot);
    };
    get("dataset", cfg.dataset_path);
    get("out", cfg.out);
    get("method", cfg.method);
    get("users", cfg.users);
    get("scorer", cfg.scorer);
    get("profile", cfg.profile);
    get("dk_file", cfg.dk_file);
    get("distance_k", cfg.pipeline.distance_k);
    get("top_k", cfg.pipeline.top_k);
    get("n_shots", cfg.pipeline.n_shots);
    get("seed", cfg.pipeline.seed);
    get("jobs", cfg.pipeline.jobs);
    get("normalize", cfg.pipeline.normalize);
    get("low_band_hz", cfg.pipeline.low_band_hz);
    get("zscore_features", cfg.pipeline.zscore_features);
    get("model", cfg.pipeline.model);
    get("temperature", cfg.pipeline.temperature);
    get("base_url", cfg.pipeline.base_url);
    get("cache_dir", cfg.pipeline.cache_dir);
    get("request_timeout_s", cfg.pipeline.request_timeout_s);
    get("max_retries", cfg.pipeline.max_retries);
    get("dk_as_system_message", cfg.pipeline.dk_as_system_message);
    if (doc.contains("filter")) {
        const auto& f = doc.at("filter");
        if (f.contains("order")) f.at("order").get_to(cfg.pipeline.filter.order);
        if (f.contains("cutoff_hz")) f.at("cutoff_hz").get_to(cfg.pipeline.filter.cutoff_hz);
        if (f.contains("sample_rate_hz")) f.at("sample_rate_hz").get_to(cfg.pipeline.filter.sample_rate_hz);
        if (f.contains("per_segment")) f.at("per_segment").get_to(cfg.pipeline.filter.per_segment);
    }
}

void apply_profile(RunConfig& cfg) {
    if (cfg.profile.empty()) return;
    if (cfg.profile == "paramA") {
        cfg.pipeline.distance_k = 5;
        cfg.pipeline.top_k = 3;
    } else if (cfg.profile == "paramB") {
        cfg.pipeline.distance_k = 10;
        cfg.pipeline.top_k = 5;
    } else {
        throw hedlm::Error("cli", "unknown profile '" + cfg.profile + "' (expected paramA or paramB)");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hedlm::Error("cli", "cannot write '" + path.string() + "'");
    out << content;
}

int cmd_features(const RunConfig& cfg) {
    const auto records = hedlm::dataset::load_dataset(cfg.dataset_path);
    const auto vectors = hedlm::batch::extract_features(records, cfg.pipeline, cfg.pipeline.jobs);

    std::string csv = "user_id,row_index,label";
    for (const auto& name : hedlm::features::feature_column_names()) csv += "," + name;
    csv += "\n";
    for (const auto& fv : vectors) {
        csv += fv.user_id + "," + std::to_string(fv.row_index) + ",";
        if (fv.label) csv += hedlm::to_string(*fv.label);
        for (double v : fv.values) csv += "," + format_double(v);
        csv += "\n";
    }
    write_file(cfg.out, csv);
    std::cout << "wrote " << vectors.size() << " feature rows to " << cfg.out << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    using namespace hedlm;

    const auto method = pipeline::method_from_token(cfg.method);
    const bool live = cfg.scorer == "live";
    if (!live && cfg.scorer != "mock") {
        throw Error("cli", "scorer must be 'mock' or 'live', got '" + cfg.scorer + "'");
    }

    PipelineConfig pcfg = cfg.pipeline;
    pcfg.scorer = live ? ScorerKind::Live : ScorerKind::Mock;
    pcfg.validate();

    std::shared_ptr<llm::ChatClient> client;
    std::unique_ptr<pipeline::RelevanceScorer> scorer;
    std::unique_ptr<pipeline::LabelPredictor> predictor;
    if (live) {
        const char* key = std::getenv("HEDLM_API_KEY");
        if (key == nullptr || std::string(key).empty()) {
            throw Error("cli", "live scorer requires the HEDLM_API_KEY environment variable");
        }
        llm::TransportConfig tcfg;
        tcfg.base_url = pcfg.base_url;
        tcfg.api_key = key;
        tcfg.timeout_s = pcfg.request_timeout_s;
        tcfg.max_retries = pcfg.max_retries;
        tcfg.cache_dir = pcfg.cache_dir;
        client = std::make_shared<llm::ChatClient>(tcfg);
        scorer = pipeline::make_live_scorer(client, pcfg);
        predictor = pipeline::make_live_predictor(client, pcfg);
    } else {
        scorer = pipeline::make_mock_scorer();
        predictor = pipeline::make_mock_predictor();
    }

    const auto dk = cfg.dk_file.empty() ? prompt::default_domain_knowledge()
                                        : prompt::load_domain_knowledge(cfg.dk_file);

    const auto records = dataset::load_dataset(cfg.dataset_path);
    auto users = cfg.users;
    if (users.empty() || (users.size() == 1 && users[0] == "all")) {
        users = dataset::user_ids(records);
    }

    const std::string method_name = pipeline::to_string(method);
    std::string audit;
    std::string table_csv = "user_id," + method_name + "\n";
    std::string text = "Per-user evaluation (method: " + method_name + ", scorer: " + cfg.scorer + ")\n";
    json out_users = json::array();

    for (const auto& user : users) {
        const auto subset = dataset::user_slice(records, user);
        const auto result = pipeline::run_user_evaluation(subset, method, pcfg, dk, *scorer, *predictor);
        for (const auto& prediction : result.predictions) {
            audit += pipeline::audit_json_line(prediction) + "\n";
        }
        table_csv += user + "," + format_double(100.0 * result.macro_f1) + "\n";
        const auto& cm = result.confusion;
        text += user + ": macro F1 = " + format_double(100.0 * result.macro_f1) +
                "%  confusion [tp=" + std::to_string(cm.tp) + " fp=" + std::to_string(cm.fp) +
                " fn=" + std::to_string(cm.fn) + " tn=" + std::to_string(cm.tn) + "]\n";
        out_users.push_back({{"user_id", user},
                             {"macro_f1", result.macro_f1},
                             {"confusion",
                              {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}}});
    }

    const fs::path out_dir(cfg.out);
    fs::create_directories(out_dir);
    write_file(out_dir / ("audit_" + method_name + ".jsonl"), audit);
    write_file(out_dir / ("macro_f1_" + method_name + ".csv"), table_csv);
    write_file(out_dir / ("report_" + method_name + ".txt"), text);
    const json report = {{"method", method_name}, {"scorer", cfg.scorer}, {"users", out_users}};
    write_file(out_dir / ("report_" + method_name + ".json"), report.dump(2) + "\n");
    std::cout << text;
    return 0;
}

int cmd_stats(const std::string& table_path, const std::string& out_dir) {
    const auto table = hedlm::eval::load_score_table(table_path);
    const auto report = hedlm::eval::build_stats_report(table);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_file(dir / "stats.json", hedlm::eval::to_json(report) + "\n");
    const std::string text = hedlm::eval::to_text(report);
    write_file(dir / "stats.txt", text);
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HED-LM: hybrid example selection for few-shot prompting over accelerometer features"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string table_path;
    bool whole_signal = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override its values)");
        cmd->add_option("--dataset", cfg.dataset_path, "dataset CSV (user_id,label,t000..t179)");
        cmd->add_option("--out", cfg.out, "output file or directory");
        cmd->add_option("--jobs", cfg.pipeline.jobs, "worker threads (default 1, 0 = all cores)");
        cmd->add_option("--low-band", cfg.pipeline.low_band_hz, "low-band boundary in Hz");
        cmd->add_option("--filter-order", cfg.pipeline.filter.order, "Butterworth order");
        cmd->add_option("--cutoff", cfg.pipeline.filter.cutoff_hz, "low-pass cutoff in Hz");
        cmd->add_option("--sample-rate", cfg.pipeline.filter.sample_rate_hz, "sampling rate in Hz");
        cmd->add_flag("--whole-signal-filter", whole_signal,
                      "filter the whole 180-sample signal instead of each segment");
    };

    auto* features_cmd = app.add_subcommand("features", "extract the 30-dimensional feature vectors to CSV");
    add_common(features_cmd);

    auto* eval_cmd = app.add_subcommand("evaluate", "run per-user few-shot evaluation");
    add_common(eval_cmd);
    eval_cmd->add_option("--method", cfg.method, "hedlm | random | distance");
    eval_cmd->add_option("--user", cfg.users, "user id(s) to evaluate (default: all)");
    eval_cmd->add_option("--scorer", cfg.scorer, "mock | live");
    eval_cmd->add_option("--seed", cfg.pipeline.seed, "seed for the random baseline");
    eval_cmd->add_option("--distance-k", cfg.pipeline.distance_k, "candidates kept by distance");
    eval_cmd->add_option("--top-k", cfg.pipeline.top_k, "candidates kept after scoring");
    eval_cmd->add_option("--n-shots", cfg.pipeline.n_shots, "examples per prompt");
    eval_cmd->add_option("--profile", cfg.profile, "paramA (5/3) or paramB (10/5)");
    eval_cmd->add_option("--dk", cfg.dk_file, "domain-knowledge JSON (default: built-in)");
    eval_cmd->add_option("--cache-dir", cfg.pipeline.cache_dir, "LLM response cache directory");
    eval_cmd->add_option("--model", cfg.pipeline.model, "chat model name");
    eval_cmd->add_option("--temperature", cfg.pipeline.temperature, "sampling temperature");
    eval_cmd->add_option("--base-url", cfg.pipeline.base_url, "OpenAI-compatible endpoint base URL");
    eval_cmd->add_flag("--zscore", cfg.pipeline.zscore_features,
                       "standardize feature dimensions before distance ranking");

    auto* stats_cmd = app.add_subcommand("stats", "statistics battery over a per-user score table");
    stats_cmd->add_option("--table", table_path, "CSV: user_id,<method columns>")->required();
    stats_cmd->add_option("--out", cfg.out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        // Config file first, profile second, explicit flags last.
        if (!config_path.empty()) {
            RunConfig merged;
            apply_config_file(merged, config_path);
            const CLI::App* active = app.get_subcommands().front();
            auto passed = [&](const std::string& flag) {
                const auto* opt = active->get_option_no_throw(flag);
                return opt != nullptr && opt->count() > 0;
            };
            if (passed("--dataset")) merged.dataset_path = cfg.dataset_path;
            if (passed("--out")) merged.out = cfg.out;
            if (passed("--jobs")) merged.pipeline.jobs = cfg.pipeline.jobs;
            if (passed("--low-band")) merged.pipeline.low_band_hz = cfg.pipeline.low_band_hz;
            if (passed("--filter-order")) merged.pipeline.filter.order = cfg.pipeline.filter.order;
            if (passed("--cutoff")) merged.pipeline.filter.cutoff_hz = cfg.pipeline.filter.cutoff_hz;
            if (passed("--sample-rate"))
                merged.pipeline.filter.sample_rate_hz = cfg.pipeline.filter.sample_rate_hz;
            if (passed("--method")) merged.method = cfg.method;
            if (passed("--user")) merged.users = cfg.users;
            if (passed("--scorer")) merged.scorer = cfg.scorer;
            if (passed("--seed")) merged.pipeline.seed = cfg.pipeline.seed;
            if (passed("--distance-k")) merged.pipeline.distance_k = cfg.pipeline.distance_k;
            if (passed("--top-k")) merged.pipeline.top_k = cfg.pipeline.top_k;
            if (passed("--n-shots")) merged.pipeline.n_shots = cfg.pipeline.n_shots;
            if (passed("--profile")) merged.profile = cfg.profile;
            if (passed("--dk")) merged.dk_file = cfg.dk_file;
            if (passed("--cache-dir")) merged.pipeline.cache_dir = cfg.pipeline.cache_dir;
            if (passed("--model")) merged.pipeline.model = cfg.pipeline.model;
            if (passed("--temperature")) merged.pipeline.temperature = cfg.pipeline.temperature;
            if (passed("--base-url")) merged.pipeline.base_url = cfg.pipeline.base_url;
            if (passed("--zscore")) merged.pipeline.zscore_features = cfg.pipeline.zscore_features;
            if (passed("--whole-signal-filter")) merged.pipeline.filter.per_segment = !whole_signal;
            cfg = merged;
        } else if (whole_signal) {
            cfg.pipeline.filter.per_segment = false;
        }
        apply_profile(cfg);

        if (features_cmd->parsed() || eval_cmd->parsed()) {
            if (cfg.dataset_path.empty()) throw hedlm::Error("cli", "--dataset is required");
            if (!fs::exists(cfg.dataset_path)) {
                throw hedlm::Error("cli", "dataset '" + cfg.dataset_path + "' does not exist");
            }
        }

        if (features_cmd->parsed()) return cmd_features(cfg);
        if (eval_cmd->parsed()) return cmd_evaluate(cfg);
        if (stats_cmd->parsed()) return cmd_stats(table_path, cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
