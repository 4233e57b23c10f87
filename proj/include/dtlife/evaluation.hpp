#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtlife/dataset.hpp"
#include "dtlife/fnn.hpp"

namespace dtlife {

enum class CurveSource { fine_tuned, generated };

std::string to_string(CurveSource s);
CurveSource parse_curve_source(const std::string& text);

struct MseCurve {
    std::size_t update_step = 0;
    CurveSource source = CurveSource::fine_tuned;
    std::map<std::size_t, double> mse;  // future stage -> MSE
};

struct CurvePair {
    MseCurve fine_tuned;
    MseCurve generated;
};

struct SuccessRatio {
    std::size_t update_step = 0;
    std::size_t n_better = 0;
    std::size_t n_all = 0;
    double ratio = 0.0;
};

/// boxplot[stage][source] -> values collected across qualifying update steps,
/// ordered by update step.
struct BoxplotColumn {
    std::vector<double> fine_tuned;
    std::vector<double> generated;
};
using BoxplotMatrix = std::map<std::size_t, BoxplotColumn>;

double stage_mse(const ConfigSnapshot& dt, const FnnSpec& spec, const StageDataset& data);

/// Curve A: frozen fine-tuned DT_i at each future stage. Curve B: generated[k]
/// evaluated at its own stage. Stages are evaluated in parallel.
CurvePair evaluate_update_step(std::size_t update_step, const ConfigSnapshot& fine_tuned,
                               std::span<const ConfigSnapshot> generated, const FnnSpec& spec,
                               std::span<const StageDataset> datasets);

/// Strict wins only; ties count against the generated model.
SuccessRatio success_ratio(const MseCurve& fine_tuned, const MseCurve& generated);

/// Stage j collects MSE values from update steps i with m + burn_in <= i < j.
BoxplotMatrix boxplot_matrix(std::span<const CurvePair> curves, std::size_t m, std::size_t burn_in = 10);

/// Linear interpolation between order statistics (numpy's default "linear").
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct StageSummary {
    std::size_t stage = 0;
    std::size_t count = 0;
    double ft_q1 = 0, ft_median = 0, ft_q3 = 0;
    double gen_q1 = 0, gen_median = 0, gen_q3 = 0;
};

struct ReportSummary {
    std::size_t steps_after_burn_in = 0;
    double mean_success_ratio = 0.0;
    double median_success_ratio = 0.0;
    std::vector<StageSummary> stages;  // non-empty boxplot stages only
    std::size_t stages_gen_median_le_ft = 0;
    double mean_generated_mse = 0.0;
    double mean_fine_tuned_mse = 0.0;
};

ReportSummary summarize(std::span<const SuccessRatio> ratios, const BoxplotMatrix& boxplot,
                        std::span<const CurvePair> curves, std::size_t m, std::size_t burn_in = 10);

void write_mse_curves_csv(const std::filesystem::path& path, std::span<const CurvePair> curves);
void write_success_ratio_csv(const std::filesystem::path& path, std::span<const SuccessRatio> ratios);
void write_boxplot_csv(const std::filesystem::path& path, const BoxplotMatrix& boxplot);

std::vector<CurvePair> read_mse_curves_csv(const std::filesystem::path& path);
std::vector<SuccessRatio> read_success_ratio_csv(const std::filesystem::path& path);

}  // namespace dtlife
