#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dtlife/dataset.hpp"
#include "dtlife/evaluation.hpp"
#include "dtlife/lifecycle.hpp"

namespace dtlife {

/// Fully resolved experiment description. Keys of the flat config text
/// mirror the command-line flag names (see config_items()).
struct RunConfig {
    std::string preset = "paper-battery";
    std::uint64_t seed = 0;
    std::string data;  // run manifest or directory; empty -> synthesize
    std::string synth_kind = "battery";
    std::size_t synth_stages = 80;
    double synth_noise = 0.0;
    std::size_t smooth_window = 50;  // engine synthesis only
    std::vector<std::size_t> fnn_dims{2, 6, 6, 6, 6, 1};
    LifecycleConfig lifecycle;
    std::size_t burn_in = 10;
    std::string out = "dtlife-out";

    FnnSpec fnn() const { return FnnSpec{fnn_dims}; }
    void validate() const;
};

/// Known presets: paper-battery, paper-engine, scaled-battery.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Sets one option by its flag name (without leading dashes).
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);
/// Ordered key/value view of every option.
std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg);
std::string config_to_text(const RunConfig& cfg);
/// Parses `key = value` lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// preset < config file < flags. The preset is taken from the flags, else
/// from the file, else the default.
RunConfig resolve_config(const std::filesystem::path* config_file,
                         const std::vector<std::pair<std::string, std::string>>& flags);
RunConfig load_resolved_config(const std::filesystem::path& file);

/// Loads or synthesizes the stage datasets described by `cfg`.
LoadedRun obtain_data(const RunConfig& cfg);
/// Synthesizes the configured family and writes it to `dir`.
LoadedRun synthesize_to(const RunConfig& cfg, const std::filesystem::path& dir);

struct LifecycleReport {
    std::vector<CurvePair> curves;
    std::vector<SuccessRatio> ratios;
    BoxplotMatrix boxplot;
    ReportSummary summary;
    std::vector<std::string> notes;
};

/// Generated configurations of one update step: raw little-endian doubles,
/// h consecutive flattened snapshots for stages i+1 .. i+h.
std::filesystem::path generated_path(const std::filesystem::path& db_dir, std::size_t step);
void save_generated(const std::filesystem::path& db_dir, std::size_t step, std::span<const ConfigSnapshot> configs);
std::vector<ConfigSnapshot> load_generated(const std::filesystem::path& db_dir, std::size_t step,
                                           const FnnSpec& spec, std::size_t horizon);

/// init -> warm-up -> alternating lifelong update / evaluation. Writes every
/// artifact under cfg.out. Progress lines go to `progress` when given.
LifecycleReport run_experiment(const RunConfig& cfg, std::ostream* progress = nullptr);
/// Recomputes curves, ratios and boxplots from a finished run directory.
LifecycleReport evaluate_run(const std::filesystem::path& run_dir, std::ostream* progress = nullptr);
/// Summary text from the CSVs of a run directory; also writes summary.txt.
std::string report_run(const std::filesystem::path& run_dir);

}  // namespace dtlife
