#include "dtlife/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dtlife/error.hpp"

namespace dtlife {

std::string to_string(CurveSource s) { return s == CurveSource::fine_tuned ? "fine_tuned" : "generated"; }

CurveSource parse_curve_source(const std::string& text) {
    if (text == "fine_tuned") return CurveSource::fine_tuned;
    if (text == "generated") return CurveSource::generated;
    throw ValidationError("unknown curve source '" + text + "'");
}

double stage_mse(const ConfigSnapshot& dt, const FnnSpec& spec, const StageDataset& data) {
    if (data.inputs.cols() != spec.layer_dims.front() || data.outputs.cols() != spec.layer_dims.back()) {
        throw DimensionError("stage " + std::to_string(data.stage_index) + ": dataset has " +
                             std::to_string(data.inputs.cols()) + " inputs / " + std::to_string(data.outputs.cols()) +
                             " outputs, network expects " + spec.dims_string());
    }
    const Tensor pred = fnn_forward(spec, dt, data.inputs);
    const auto p = pred.values();
    const auto y = data.outputs.values();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - y[k];
        acc += d * d;
    }
    return acc / static_cast<double>(p.size());
}

CurvePair evaluate_update_step(std::size_t update_step, const ConfigSnapshot& fine_tuned,
                               std::span<const ConfigSnapshot> generated, const FnnSpec& spec,
                               std::span<const StageDataset> datasets) {
    std::vector<const StageDataset*> future;
    for (const auto& d : datasets) {
        if (d.stage_index > update_step) future.push_back(&d);
    }
    if (future.empty()) {
        throw ValidationError("no future stages after update step " + std::to_string(update_step));
    }
    if (generated.size() != future.size()) {
        throw ValidationError("update step " + std::to_string(update_step) + ": " + std::to_string(generated.size()) +
                              " generated configurations for " + std::to_string(future.size()) + " future stages");
    }
    const auto n = static_cast<std::ptrdiff_t>(future.size());
    std::vector<double> ft(future.size()), gen(future.size());
    std::string error;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        try {
            const StageDataset& d = *future[k];
            if (generated[k].stage_index != d.stage_index) {
                throw ValidationError("generated configuration for stage " +
                                      std::to_string(generated[k].stage_index) + " paired with stage " +
                                      std::to_string(d.stage_index));
            }
            ft[k] = stage_mse(fine_tuned, spec, d);
            gen[k] = stage_mse(generated[k], spec, d);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw ValidationError(error);
    CurvePair out;
    out.fine_tuned.update_step = out.generated.update_step = update_step;
    out.fine_tuned.source = CurveSource::fine_tuned;
    out.generated.source = CurveSource::generated;
    for (std::size_t k = 0; k < future.size(); ++k) {
        out.fine_tuned.mse[future[k]->stage_index] = ft[k];
        out.generated.mse[future[k]->stage_index] = gen[k];
    }
    return out;
}

SuccessRatio success_ratio(const MseCurve& fine_tuned, const MseCurve& generated) {
    if (fine_tuned.mse.empty()) {
        throw ValidationError("success ratio undefined: no future stages at update step " +
                              std::to_string(fine_tuned.update_step));
    }
    if (fine_tuned.mse.size() != generated.mse.size()) throw ValidationError("success ratio: stage sets differ");
    SuccessRatio r;
    r.update_step = fine_tuned.update_step;
    for (const auto& [stage, ft] : fine_tuned.mse) {
        auto it = generated.mse.find(stage);
        if (it == generated.mse.end()) throw ValidationError("success ratio: stage sets differ");
        if (it->second < ft) ++r.n_better;
        ++r.n_all;
    }
    r.ratio = static_cast<double>(r.n_better) / static_cast<double>(r.n_all);
    return r;
}

BoxplotMatrix boxplot_matrix(std::span<const CurvePair> curves, std::size_t m, std::size_t burn_in) {
    BoxplotMatrix out;
    // Make sure every evaluated stage has a column, even if empty.
    for (const auto& c : curves) {
        for (const auto& [stage, v] : c.fine_tuned.mse) out[stage];
    }
    std::vector<const CurvePair*> ordered;
    for (const auto& c : curves) ordered.push_back(&c);
    std::stable_sort(ordered.begin(), ordered.end(), [](const CurvePair* a, const CurvePair* b) {
        return a->fine_tuned.update_step < b->fine_tuned.update_step;
    });
    for (const CurvePair* c : ordered) {
        const std::size_t i = c->fine_tuned.update_step;
        if (i < m + burn_in) continue;
        for (const auto& [j, ft] : c->fine_tuned.mse) {
            if (j <= i) continue;
            out[j].fine_tuned.push_back(ft);
            out[j].generated.push_back(c->generated.mse.at(j));
        }
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

ReportSummary summarize(std::span<const SuccessRatio> ratios, const BoxplotMatrix& boxplot,
                        std::span<const CurvePair> curves, std::size_t m, std::size_t burn_in) {
    ReportSummary s;
    std::vector<double> sc;
    for (const auto& r : ratios) {
        if (r.update_step >= m + burn_in) sc.push_back(r.ratio);
    }
    s.steps_after_burn_in = sc.size();
    if (!sc.empty()) {
        double acc = 0.0;
        for (double v : sc) acc += v;
        s.mean_success_ratio = acc / static_cast<double>(sc.size());
        s.median_success_ratio = median(sc);
    }
    for (const auto& [stage, col] : boxplot) {
        if (col.fine_tuned.empty()) continue;
        StageSummary st;
        st.stage = stage;
        st.count = col.fine_tuned.size();
        st.ft_q1 = quantile(col.fine_tuned, 0.25);
        st.ft_median = quantile(col.fine_tuned, 0.5);
        st.ft_q3 = quantile(col.fine_tuned, 0.75);
        st.gen_q1 = quantile(col.generated, 0.25);
        st.gen_median = quantile(col.generated, 0.5);
        st.gen_q3 = quantile(col.generated, 0.75);
        if (st.gen_median <= st.ft_median) ++s.stages_gen_median_le_ft;
        s.stages.push_back(st);
    }
    double gen = 0.0, ft = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
        for (const auto& [j, v] : c.fine_tuned.mse) {
            ft += v;
            gen += c.generated.mse.at(j);
            ++n;
        }
    }
    if (n > 0) {
        s.mean_generated_mse = gen / static_cast<double>(n);
        s.mean_fine_tuned_mse = ft / static_cast<double>(n);
    }
    return s;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    return f;
}

void close_out(std::ofstream& f, const std::filesystem::path& path) {
    f.close();
    if (!f) throw IoError("failed writing " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, const std::string& header) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("missing " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != header) throw IoError(path.string() + ": unexpected header");
    return f;
}

std::size_t to_size(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw IoError(path.string() + ": bad integer '" + s + "'");
    }
}

double to_double(const std::string& s, const std::filesystem::path& path) {
    try {
        return parse_double(s);
    } catch (const std::exception&) {
        throw IoError(path.string() + ": bad number '" + s + "'");
    }
}

}  // namespace

void write_mse_curves_csv(const std::filesystem::path& path, std::span<const CurvePair> curves) {
    auto f = open_out(path);
    f << "update_step,future_stage,source,mse\n";
    for (const auto& c : curves) {
        for (const MseCurve* curve : {&c.fine_tuned, &c.generated}) {
            for (const auto& [j, v] : curve->mse) {
                f << curve->update_step << ',' << j << ',' << to_string(curve->source) << ',' << format_double(v)
                  << '\n';
            }
        }
    }
    close_out(f, path);
}

void write_success_ratio_csv(const std::filesystem::path& path, std::span<const SuccessRatio> ratios) {
    auto f = open_out(path);
    f << "update_step,n_better,n_all,ratio\n";
    for (const auto& r : ratios) {
        f << r.update_step << ',' << r.n_better << ',' << r.n_all << ',' << format_double(r.ratio) << '\n';
    }
    close_out(f, path);
}

void write_boxplot_csv(const std::filesystem::path& path, const BoxplotMatrix& boxplot) {
    // One row per (stage, source); values follow in update-step order.
    // Quartiles in summaries use linear interpolation between order statistics.
    auto f = open_out(path);
    f << "future_stage,source,values...\n";
    for (const auto& [stage, col] : boxplot) {
        for (CurveSource src : {CurveSource::fine_tuned, CurveSource::generated}) {
            const auto& vals = src == CurveSource::fine_tuned ? col.fine_tuned : col.generated;
            f << stage << ',' << to_string(src);
            for (double v : vals) f << ',' << format_double(v);
            f << '\n';
        }
    }
    close_out(f, path);
}

std::vector<CurvePair> read_mse_curves_csv(const std::filesystem::path& path) {
    auto f = open_in(path, "update_step,future_stage,source,mse");
    std::map<std::size_t, CurvePair> by_step;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) throw IoError(path.string() + ": malformed row '" + line + "'");
        const std::size_t i = to_size(cells[0], path);
        CurvePair& c = by_step[i];
        c.fine_tuned.update_step = c.generated.update_step = i;
        c.fine_tuned.source = CurveSource::fine_tuned;
        c.generated.source = CurveSource::generated;
        const CurveSource src = parse_curve_source(cells[2]);
        (src == CurveSource::fine_tuned ? c.fine_tuned : c.generated).mse[to_size(cells[1], path)] =
            to_double(cells[3], path);
    }
    std::vector<CurvePair> out;
    for (auto& [i, c] : by_step) out.push_back(std::move(c));
    return out;
}

std::vector<SuccessRatio> read_success_ratio_csv(const std::filesystem::path& path) {
    auto f = open_in(path, "update_step,n_better,n_all,ratio");
    std::vector<SuccessRatio> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) throw IoError(path.string() + ": malformed row '" + line + "'");
        out.push_back({to_size(cells[0], path), to_size(cells[1], path), to_size(cells[2], path),
                       to_double(cells[3], path)});
    }
    return out;
}

}  // namespace dtlife
