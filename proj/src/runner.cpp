#include "dtlife/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dtlife/database.hpp"
#include "dtlife/error.hpp"
#include "dtlife/synth.hpp"

namespace fs = std::filesystem;

namespace dtlife {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        const auto v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ValidationError("option '" + key + "': expected a non-negative integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const std::exception&) {
        throw ValidationError("option '" + key + "': expected a number, got '" + value + "'");
    }
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    f << text;
    f.close();
    if (!f) throw IoError("failed writing " + p.string());
}

/// Re-throws the active exception with a phase/stage prefix, keeping its kind.
[[noreturn]] void rethrow_in_phase(const std::string& phase, std::size_t stage) {
    const std::string prefix = phase + " (stage " + std::to_string(stage) + "): ";
    try {
        throw;
    } catch (const TrainingError& e) {
        throw TrainingError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    if (preset.empty()) throw ValidationError("preset name must not be empty");
    if (data.empty() && synth_kind != "battery" && synth_kind != "engine") {
        throw ValidationError("synth-kind must be battery or engine, got '" + synth_kind + "'");
    }
    if (data.empty() && synth_stages == 0) throw ValidationError("synth-stages must be positive");
    if (synth_noise < 0.0) throw ValidationError("synth-noise must be non-negative");
    if (smooth_window == 0) throw ValidationError("smooth-window must be positive");
    fnn().validate();
    lifecycle.validate();
    if (out.empty()) throw ValidationError("output directory must not be empty");
}

std::vector<std::string> preset_names() { return {"paper-battery", "paper-engine", "scaled-battery"}; }

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    c.lifecycle.warmup_m = 20;
    c.lifecycle.window_w = 5;
    c.lifecycle.holdout_tail = 5;
    c.lifecycle.init = {1000, 5e-3, 0.0, 0};
    c.lifecycle.fine_tune = {10, 1e-3, 1e-5, 0};
    c.lifecycle.dynamic = {1000, 1e-4, 1e-4, 0};
    if (name == "paper-battery") return c;
    if (name == "paper-engine") {
        c.synth_kind = "engine";
        c.synth_stages = 87;
        c.fnn_dims = FnnSpec::engine().layer_dims;
        c.smooth_window = 50;
        c.lifecycle.warmup_m = 40;
        c.lifecycle.window_w = 10;
        return c;
    }
    if (name == "scaled-battery") {
        c.synth_stages = 40;
        c.lifecycle.warmup_m = 10;
        c.lifecycle.dynamic.epochs = 300;
        return c;
    }
    throw ValidationError("unknown preset '" + name + "' (expected paper-battery, paper-engine or scaled-battery)");
}

void set_option(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    LifecycleConfig& l = c.lifecycle;
    if (key == "preset") c.preset = v;
    else if (key == "seed") c.seed = parse_size(key, v);
    else if (key == "data") c.data = v;
    else if (key == "synth-kind") c.synth_kind = v;
    else if (key == "synth-stages") c.synth_stages = parse_size(key, v);
    else if (key == "synth-noise") c.synth_noise = parse_real(key, v);
    else if (key == "smooth-window") c.smooth_window = parse_size(key, v);
    else if (key == "fnn-dims") c.fnn_dims = parse_fnn_dims(v).layer_dims;
    else if (key == "warmup-m") l.warmup_m = parse_size(key, v);
    else if (key == "window-w") l.window_w = parse_size(key, v);
    else if (key == "holdout") l.holdout_tail = parse_size(key, v);
    else if (key == "forecaster") l.forecaster = parse_forecaster_kind(v);
    else if (key == "ae-mode") l.ae_mode = parse_ae_mode(v);
    else if (key == "entropy-beta") l.entropy.beta = parse_real(key, v);
    else if (key == "entropy-a") l.entropy.a = parse_real(key, v);
    else if (key == "init-epochs") l.init.epochs = parse_size(key, v);
    else if (key == "init-lr") l.init.learning_rate = parse_real(key, v);
    else if (key == "init-alpha") l.init.alpha = parse_real(key, v);
    else if (key == "fine-tune-epochs") l.fine_tune.epochs = parse_size(key, v);
    else if (key == "fine-tune-lr") l.fine_tune.learning_rate = parse_real(key, v);
    else if (key == "fine-tune-alpha") l.fine_tune.alpha = parse_real(key, v);
    else if (key == "dynamic-epochs") l.dynamic.epochs = parse_size(key, v);
    else if (key == "dynamic-lr") l.dynamic.learning_rate = parse_real(key, v);
    else if (key == "dynamic-alpha") l.dynamic.alpha = parse_real(key, v);
    else if (key == "burn-in") c.burn_in = parse_size(key, v);
    else if (key == "out") c.out = v;
    else throw ValidationError("unknown option '" + key + "'");
    c.lifecycle.seed = c.seed;
}

std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& c) {
    const LifecycleConfig& l = c.lifecycle;
    return {
        {"preset", c.preset},
        {"seed", std::to_string(c.seed)},
        {"data", c.data},
        {"synth-kind", c.synth_kind},
        {"synth-stages", std::to_string(c.synth_stages)},
        {"synth-noise", format_double(c.synth_noise)},
        {"smooth-window", std::to_string(c.smooth_window)},
        {"fnn-dims", c.fnn().dims_string()},
        {"warmup-m", std::to_string(l.warmup_m)},
        {"window-w", std::to_string(l.window_w)},
        {"holdout", std::to_string(l.holdout_tail)},
        {"forecaster", to_string(l.forecaster)},
        {"ae-mode", to_string(l.ae_mode)},
        {"entropy-beta", format_double(l.entropy.beta)},
        {"entropy-a", format_double(l.entropy.a)},
        {"init-epochs", std::to_string(l.init.epochs)},
        {"init-lr", format_double(l.init.learning_rate)},
        {"init-alpha", format_double(l.init.alpha)},
        {"fine-tune-epochs", std::to_string(l.fine_tune.epochs)},
        {"fine-tune-lr", format_double(l.fine_tune.learning_rate)},
        {"fine-tune-alpha", format_double(l.fine_tune.alpha)},
        {"dynamic-epochs", std::to_string(l.dynamic.epochs)},
        {"dynamic-lr", format_double(l.dynamic.learning_rate)},
        {"dynamic-alpha", format_double(l.dynamic.alpha)},
        {"burn-in", std::to_string(c.burn_in)},
        {"out", c.out},
    };
}

std::string config_to_text(const RunConfig& cfg) {
    std::string s;
    for (const auto& [k, v] : config_items(cfg)) s += k + " = " + v + "\n";
    return s;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

RunConfig resolve_config(const fs::path* config_file, const std::vector<std::pair<std::string, std::string>>& flags) {
    std::vector<std::pair<std::string, std::string>> file_items;
    if (config_file) file_items = parse_config_text(read_text(*config_file));
    std::string preset = "paper-battery";
    for (const auto& [k, v] : file_items) {
        if (k == "preset") preset = v;
    }
    for (const auto& [k, v] : flags) {
        if (k == "preset") preset = v;
    }
    RunConfig c = preset_config(preset);
    for (const auto& [k, v] : file_items) set_option(c, k, v);
    for (const auto& [k, v] : flags) set_option(c, k, v);
    c.preset = preset;
    c.lifecycle.seed = c.seed;
    c.validate();
    return c;
}

RunConfig load_resolved_config(const fs::path& file) {
    const auto items = parse_config_text(read_text(file));
    std::string preset = "paper-battery";
    for (const auto& [k, v] : items) {
        if (k == "preset") preset = v;
    }
    RunConfig c = preset_config(preset);
    for (const auto& [k, v] : items) set_option(c, k, v);
    c.validate();
    return c;
}

namespace {

std::vector<StageDataset> synthesize(const RunConfig& cfg, RunManifest& manifest) {
    if (cfg.synth_kind == "battery") {
        BatterySynthParams p;
        p.stages = cfg.synth_stages;
        p.noise = cfg.synth_noise;
        p.seed = cfg.seed;
        manifest = battery_manifest(p);
        return synth_battery(p);
    }
    EngineSynthParams p;
    p.stages = cfg.synth_stages;
    p.noise = cfg.synth_noise;
    p.seed = cfg.seed;
    p.window = cfg.smooth_window;
    manifest = engine_manifest(p);
    return synth_engine(p);
}

}  // namespace

LoadedRun obtain_data(const RunConfig& cfg) {
    if (!cfg.data.empty()) return load_run(cfg.data);
    LoadedRun run;
    run.stages = synthesize(cfg, run.manifest);
    return run;
}

LoadedRun synthesize_to(const RunConfig& cfg, const fs::path& dir) {
    LoadedRun run;
    run.stages = synthesize(cfg, run.manifest);
    write_run(dir, run.manifest, run.stages);
    return run;
}

fs::path generated_path(const fs::path& db_dir, std::size_t step) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04zu.bin", step);
    return db_dir / "generated" / name;
}

void save_generated(const fs::path& db_dir, std::size_t step, std::span<const ConfigSnapshot> configs) {
    std::vector<double> all;
    for (const auto& c : configs) {
        const auto flat = c.flat();
        all.insert(all.end(), flat.begin(), flat.end());
    }
    fs::create_directories(db_dir / "generated");
    write_doubles_le(generated_path(db_dir, step), all);
}

std::vector<ConfigSnapshot> load_generated(const fs::path& db_dir, std::size_t step, const FnnSpec& spec,
                                           std::size_t horizon) {
    const auto path = generated_path(db_dir, step);
    const auto all = read_doubles_le(path);
    const std::size_t p = spec.param_count();
    if (all.size() != horizon * p) {
        throw IoError(path.string() + ": holds " + std::to_string(all.size()) + " values, expected " +
                      std::to_string(horizon) + " x " + std::to_string(p));
    }
    std::vector<ConfigSnapshot> out;
    for (std::size_t k = 0; k < horizon; ++k) {
        out.push_back(snapshot_from_flat(spec, std::span<const double>(all).subspan(k * p, p), step + 1 + k));
    }
    return out;
}

namespace {

void check_stage_count(const RunConfig& cfg, std::size_t k) {
    const auto& l = cfg.lifecycle;
    if (k < l.warmup_m + 1 + l.holdout_tail) {
        throw ValidationError("needs more stages: " + std::to_string(k) + " stages cannot cover warm-up m = " +
                              std::to_string(l.warmup_m) + " plus holdout " + std::to_string(l.holdout_tail));
    }
}

void write_entropy_json(const fs::path& path, const LifecycleState& s) {
    nlohmann::ordered_json j;
    j["beta"] = s.cfg.entropy.beta;
    j["a"] = s.cfg.entropy.a;
    j["parameter_count"] = s.spec.param_count();
    j["entropy_bits"] = s.entropy.entropy_bits;
    j["latent_dim"] = s.entropy.latent_dim;
    j["ae_mode"] = to_string(s.cfg.ae_mode);
    j["block_latent_dims"] = s.latent_dims;
    double pmin = 1.0, pmax = 0.0;
    for (double p : s.entropy.probabilities) {
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
    }
    j["probability_min"] = pmin;
    j["probability_max"] = pmax;
    write_text(path, j.dump(2) + "\n");
}

void write_training_log(const fs::path& path, const std::vector<StepLog>& log) {
    // Wall-clock timings are deliberately left out so reruns are byte-identical.
    std::string s = "stage,phase,fine_tune_loss,fine_tune_mse,fine_tune_l2,ae_loss,forecaster_loss\n";
    for (const auto& e : log) {
        s += std::to_string(e.stage) + "," + e.phase + "," + format_double(e.fine_tune_loss) + "," +
             format_double(e.fine_tune_mse) + "," + format_double(e.fine_tune_l2) + "," + format_double(e.ae_loss) +
             "," + format_double(e.forecaster_loss) + "\n";
    }
    write_text(path, s);
}

void write_report(const fs::path& dir, LifecycleReport& r, const RunConfig& cfg) {
    r.boxplot = boxplot_matrix(r.curves, cfg.lifecycle.warmup_m, cfg.burn_in);
    r.summary = summarize(r.ratios, r.boxplot, r.curves, cfg.lifecycle.warmup_m, cfg.burn_in);
    write_mse_curves_csv(dir / "mse_curves.csv", r.curves);
    write_success_ratio_csv(dir / "success_ratio.csv", r.ratios);
    write_boxplot_csv(dir / "boxplot.csv", r.boxplot);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

}  // namespace

LifecycleReport run_experiment(const RunConfig& cfg, std::ostream* progress) {
    cfg.validate();
    const fs::path out = cfg.out;
    fs::create_directories(out);
    write_text(out / "config.resolved", config_to_text(cfg));

    LoadedRun data;
    if (cfg.data.empty()) {
        data = synthesize_to(cfg, out / "data");
    } else {
        data = load_run(cfg.data);
    }
    for (const auto& w : data.warnings) {
        if (progress) *progress << "warning: " << w << "\n";
    }
    const auto& stages = data.stages;
    const std::size_t k = stages.size();
    check_stage_count(cfg, k);
    const FnnSpec spec = cfg.fnn();
    const auto& lc = cfg.lifecycle;
    const fs::path db_dir = out / "db";
    const std::size_t last_update = k - 1 - lc.holdout_tail;

    using Clock = std::chrono::steady_clock;
    const auto t_start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t_start).count(); };

    LifecycleState state;
    try {
        state = init_phase(stages[0], spec, lc);
    } catch (const std::exception&) {
        rethrow_in_phase("init", 0);
    }
    save_database(state.db, db_dir);
    write_entropy_json(out / "entropy.json", state);
    if (progress) {
        *progress << "[init] stage 0 loss " << fmt(state.log.back().fine_tune_loss) << " H "
                  << fmt(state.entropy.entropy_bits) << " bits, L " << state.entropy.latent_dim << " ("
                  << fmt(elapsed()) << " s)\n";
    }
    try {
        warmup_phase(state, std::span<const StageDataset>(stages).subspan(1, lc.warmup_m));
    } catch (const std::exception&) {
        rethrow_in_phase("warm-up", state.db.next_index());
    }

    LifecycleReport report;
    for (std::size_t i = lc.warmup_m; i <= last_update; ++i) {
        if (i > lc.warmup_m) {
            try {
                lifelong_update_step(state, stages[i]);
            } catch (const std::exception&) {
                rethrow_in_phase("lifelong update", i);
            }
        }
        save_database(state.db, db_dir);
        const std::size_t horizon = k - 1 - i;
        std::string sc_text = "n/a";
        if (horizon == 0) {
            report.notes.push_back("update step " + std::to_string(i) +
                                   ": no future stages, success ratio undefined and omitted");
        } else {
            try {
                const auto gen = predict_future_configs(state, horizon);
                save_generated(db_dir, i, gen);
                report.curves.push_back(evaluate_update_step(i, state.current, gen, spec, stages));
                report.ratios.push_back(success_ratio(report.curves.back().fine_tuned, report.curves.back().generated));
                sc_text = fmt(report.ratios.back().ratio);
            } catch (const std::exception&) {
                rethrow_in_phase("evaluation", i);
            }
        }
        write_report(out, report, cfg);
        if (progress) {
            const auto& e = state.log.back();
            *progress << "[" << e.phase << "] stage " << i << " fine-tune loss " << fmt(e.fine_tune_loss)
                      << " AE loss " << fmt(e.ae_loss) << " forecaster loss " << fmt(e.forecaster_loss) << " sc "
                      << sc_text << " (" << fmt(elapsed()) << " s)\n";
        }
    }
    write_training_log(out / "training_log.csv", state.log);
    for (const auto& n : report.notes) {
        if (progress) *progress << "note: " << n << "\n";
    }
    report_run(out);
    return report;
}

LifecycleReport evaluate_run(const fs::path& run_dir, std::ostream* progress) {
    RunConfig cfg = load_resolved_config(run_dir / "config.resolved");
    const LoadedRun data = cfg.data.empty() ? load_run(run_dir / "data") : load_run(cfg.data);
    const auto& stages = data.stages;
    const std::size_t k = stages.size();
    check_stage_count(cfg, k);
    const FnnSpec spec = cfg.fnn();
    const fs::path db_dir = run_dir / "db";
    const ConfigDatabase db = load_database(db_dir, &spec);
    const std::size_t last_update = k - 1 - cfg.lifecycle.holdout_tail;
    if (db.size() != last_update + 1) {
        throw ValidationError("database holds " + std::to_string(db.size()) + " configurations, expected " +
                              std::to_string(last_update + 1) + " for this data");
    }
    LifecycleReport report;
    for (std::size_t i = cfg.lifecycle.warmup_m; i <= last_update; ++i) {
        const std::size_t horizon = k - 1 - i;
        if (horizon == 0) {
            report.notes.push_back("update step " + std::to_string(i) +
                                   ": no future stages, success ratio undefined and omitted");
            continue;
        }
        const auto gen = load_generated(db_dir, i, spec, horizon);
        report.curves.push_back(evaluate_update_step(i, db.at(i), gen, spec, stages));
        report.ratios.push_back(success_ratio(report.curves.back().fine_tuned, report.curves.back().generated));
        if (progress) *progress << "[evaluate] update step " << i << " sc " << fmt(report.ratios.back().ratio) << "\n";
    }
    write_report(run_dir, report, cfg);
    for (const auto& n : report.notes) {
        if (progress) *progress << "note: " << n << "\n";
    }
    report_run(run_dir);
    return report;
}

std::string report_run(const fs::path& run_dir) {
    const RunConfig cfg = load_resolved_config(run_dir / "config.resolved");
    const auto curves = read_mse_curves_csv(run_dir / "mse_curves.csv");
    const auto ratios = read_success_ratio_csv(run_dir / "success_ratio.csv");
    const std::size_t m = cfg.lifecycle.warmup_m;
    const auto box = boxplot_matrix(curves, m, cfg.burn_in);
    const auto s = summarize(ratios, box, curves, m, cfg.burn_in);

    std::ostringstream o;
    o << "preset " << cfg.preset << ", seed " << cfg.seed << "\n";
    o << "network " << cfg.fnn().dims_string() << ", forecaster " << to_string(cfg.lifecycle.forecaster)
      << ", autoencoder " << to_string(cfg.lifecycle.ae_mode) << "\n";
    o << "warm-up m " << m << ", window w " << cfg.lifecycle.window_w << ", holdout "
      << cfg.lifecycle.holdout_tail << ", burn-in " << cfg.burn_in << "\n";
    o << "update steps evaluated " << ratios.size() << ", after burn-in " << s.steps_after_burn_in << "\n";
    if (s.steps_after_burn_in > 0) {
        o << "mean success ratio " << fmt(s.mean_success_ratio) << "\n";
        o << "median success ratio " << fmt(s.median_success_ratio) << "\n";
    } else {
        o << "mean success ratio n/a (no update steps after burn-in)\n";
    }
    o << "mean generated MSE " << fmt(s.mean_generated_mse) << ", mean fine-tuned MSE "
      << fmt(s.mean_fine_tuned_mse) << "\n";
    o << "stages with generated median <= fine-tuned median " << s.stages_gen_median_le_ft << " of "
      << s.stages.size() << "\n";
    o << "stage,count,ft_q1,ft_median,ft_q3,gen_q1,gen_median,gen_q3\n";
    for (const auto& st : s.stages) {
        o << st.stage << ',' << st.count << ',' << fmt(st.ft_q1) << ',' << fmt(st.ft_median) << ',' << fmt(st.ft_q3)
          << ',' << fmt(st.gen_q1) << ',' << fmt(st.gen_median) << ',' << fmt(st.gen_q3) << "\n";
    }
    const std::string text = o.str();
    write_text(run_dir / "summary.txt", text);
    return text;
}

}  // namespace dtlife
