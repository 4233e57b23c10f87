#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dtlife/tensor.hpp"

namespace dtlife {

/// Input/output samples measured at one degradation stage.
struct StageDataset {
    std::size_t stage_index = 0;
    Tensor inputs;   // n x d_in
    Tensor outputs;  // n x d_out
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    std::vector<std::string> input_units;
    std::vector<std::string> output_units;

    std::size_t samples() const noexcept { return inputs.rows(); }
    /// Throws ValidationError naming the stage on empty or non-finite data.
    void validate() const;
};

/// Run-level metadata stored in the manifest next to the per-stage CSV files.
struct RunManifest {
    std::string run_name;
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    std::vector<std::string> input_units;
    std::vector<std::string> output_units;
    std::vector<std::string> preprocessing;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> attributes;
};

struct LoadedRun {
    RunManifest manifest;
    std::vector<StageDataset> stages;
    /// Original stage index -> contiguous index, populated when gaps were closed.
    std::map<std::size_t, std::size_t> reindexed;
    std::vector<std::string> warnings;
};

/// Writes `manifest.json` plus one `stage_<i>.csv` per stage.
void write_run(const std::filesystem::path& dir, const RunManifest& manifest,
               const std::vector<StageDataset>& stages);
/// Loads stages in index order; closes index gaps by re-indexing.
LoadedRun load_run(const std::filesystem::path& manifest_or_dir);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace dtlife
