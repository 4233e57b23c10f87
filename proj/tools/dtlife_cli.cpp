// dtlife: synthesize stage data, run lifecycle experiments, re-evaluate and
// summarize them. Exit codes: 0 ok, 2 invalid input, 3 training diverged,
// 4 I/O failure.
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dtlife/error.hpp"
#include "dtlife/runner.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct OptionFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void add(CLI::App& app, const std::string& key, const std::string& help) {
        options[key] = app.add_option("--" + key, values[key], help);
    }
    std::vector<std::pair<std::string, std::string>> given() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [k, opt] : options) {
            if (opt->count() > 0) out.emplace_back(k, values.at(k));
        }
        return out;
    }
};

void add_run_flags(CLI::App& app, OptionFlags& f) {
    f.add(app, "preset", "paper-battery | paper-engine | scaled-battery");
    f.add(app, "seed", "base seed for data synthesis and every training run");
    f.add(app, "data", "run manifest (or its directory); omit to synthesize");
    f.add(app, "synth-kind", "battery | engine");
    f.add(app, "synth-stages", "number of synthetic stages K");
    f.add(app, "synth-noise", "observation noise std-dev");
    f.add(app, "smooth-window", "engine block-mean window");
    f.add(app, "fnn-dims", "DT layer widths, e.g. 2-6-6-6-6-1");
    f.add(app, "warmup-m", "warm-up stages m");
    f.add(app, "window-w", "forecaster window w");
    f.add(app, "holdout", "trailing stages never trained on");
    f.add(app, "forecaster", "lstm | transformer");
    f.add(app, "ae-mode", "joint | per-layer");
    f.add(app, "entropy-beta", "Gibbs inverse temperature");
    f.add(app, "entropy-a", "latent width multiplier");
    f.add(app, "init-epochs", "DT_0 epochs");
    f.add(app, "init-lr", "DT_0 learning rate");
    f.add(app, "init-alpha", "DT_0 l2 weight");
    f.add(app, "fine-tune-epochs", "fine-tuning epochs per stage");
    f.add(app, "fine-tune-lr", "fine-tuning learning rate");
    f.add(app, "fine-tune-alpha", "fine-tuning l2 weight");
    f.add(app, "dynamic-epochs", "autoencoder/forecaster epochs");
    f.add(app, "dynamic-lr", "autoencoder/forecaster learning rate");
    f.add(app, "dynamic-alpha", "autoencoder/forecaster l2 weight");
    f.add(app, "burn-in", "update steps skipped in aggregate statistics");
    f.add(app, "out", "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lifelong digital-twin updating: data synthesis, lifecycle runs and reports"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "write a synthetic run (manifest + stage CSVs)");
    OptionFlags synth_flags;
    for (const char* k : {"preset", "seed", "synth-kind", "synth-stages", "synth-noise", "smooth-window"}) {
        synth_flags.add(*synth, k, "see `run --help`");
    }
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* run = app.add_subcommand("run", "init, warm-up and lifelong updates with evaluation");
    OptionFlags run_flags;
    add_run_flags(*run, run_flags);
    std::string config_file;
    run->add_option("--config", config_file, "flat key = value file; flags override it")->check(CLI::ExistingFile);

    auto* evaluate = app.add_subcommand("evaluate", "recompute report CSVs from a finished run without retraining");
    std::string eval_dir;
    evaluate->add_option("run_dir", eval_dir, "output directory of `run`")->required()->check(CLI::ExistingDirectory);

    auto* report = app.add_subcommand("report", "summarize the CSVs of a run directory");
    std::string report_dir;
    report->add_option("run_dir", report_dir, "output directory of `run`")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*synth) {
            const auto cfg = dtlife::resolve_config(nullptr, synth_flags.given());
            const auto data = dtlife::synthesize_to(cfg, synth_out);
            std::cerr << "wrote " << data.stages.size() << " " << cfg.synth_kind << " stages to " << synth_out
                      << " (seed " << cfg.seed << ")\n";
        } else if (*run) {
            const fs::path cfg_path = config_file;
            const auto cfg = dtlife::resolve_config(config_file.empty() ? nullptr : &cfg_path, run_flags.given());
            dtlife::run_experiment(cfg, &std::cerr);
            std::cerr << "outputs in " << cfg.out << "\n";
        } else if (*evaluate) {
            dtlife::evaluate_run(eval_dir, &std::cerr);
        } else if (*report) {
            std::cout << dtlife::report_run(report_dir);
        }
    } catch (const dtlife::TrainingError& e) {
        std::cerr << "error: training diverged: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const dtlife::IoError& e) {
        std::cerr << "error: I/O: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: I/O: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
