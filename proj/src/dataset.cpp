#include "dtlife/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "dtlife/error.hpp"

namespace dtlife {

namespace fs = std::filesystem;
using nlohmann::json;

void StageDataset::validate() const {
    const std::string where = "stage " + std::to_string(stage_index);
    if (inputs.rows() == 0) throw ValidationError(where + ": dataset is empty");
    if (inputs.rows() != outputs.rows()) {
        throw ValidationError(where + ": " + std::to_string(inputs.rows()) + " input rows vs " +
                              std::to_string(outputs.rows()) + " output rows");
    }
    if (inputs.cols() == 0 || outputs.cols() == 0) {
        throw ValidationError(where + ": needs at least one input and one output column");
    }
    if (!inputs.all_finite() || !outputs.all_finite()) {
        throw ValidationError(where + ": non-finite values");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw ValidationError("not a number: '" + text + "'");
    }
    return v;
}

namespace {

std::string stage_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "stage_%04zu.csv", index);
    return buf;
}

json columns_json(const std::vector<std::string>& names, const std::vector<std::string>& units) {
    json arr = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        arr.push_back({{"name", names[i]}, {"unit", i < units.size() ? units[i] : ""}});
    }
    return arr;
}

void read_columns(const json& arr, std::vector<std::string>& names, std::vector<std::string>& units) {
    for (const auto& c : arr) {
        names.push_back(c.at("name").get<std::string>());
        units.push_back(c.value("unit", ""));
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void write_run(const fs::path& dir, const RunManifest& manifest, const std::vector<StageDataset>& stages) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
    json j;
    j["format"] = "dtlife-run/1";
    j["run_name"] = manifest.run_name;
    j["seed"] = manifest.seed;
    j["columns"] = {{"inputs", columns_json(manifest.input_names, manifest.input_units)},
                    {"outputs", columns_json(manifest.output_names, manifest.output_units)}};
    j["preprocessing"] = manifest.preprocessing;
    j["attributes"] = manifest.attributes;
    j["stages"] = json::array();
    for (const StageDataset& s : stages) {
        s.validate();
        if (s.inputs.cols() != manifest.input_names.size() ||
            s.outputs.cols() != manifest.output_names.size()) {
            throw ValidationError("stage " + std::to_string(s.stage_index) +
                                  ": column count does not match the manifest");
        }
        const std::string file = stage_file_name(s.stage_index);
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / file).string());
        std::string line;
        for (std::size_t c = 0; c < manifest.input_names.size(); ++c) {
            line += (c ? "," : "") + manifest.input_names[c];
        }
        for (const auto& name : manifest.output_names) line += "," + name;
        out << line << '\n';
        for (std::size_t r = 0; r < s.samples(); ++r) {
            line.clear();
            for (std::size_t c = 0; c < s.inputs.cols(); ++c) {
                if (c) line += ',';
                line += format_double(s.inputs(r, c));
            }
            for (std::size_t c = 0; c < s.outputs.cols(); ++c) {
                line += ',';
                line += format_double(s.outputs(r, c));
            }
            out << line << '\n';
        }
        if (!out) throw IoError("write failed for " + (dir / file).string());
        j["stages"].push_back({{"index", s.stage_index}, {"file", file}, {"rows", s.samples()}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for manifest.json");
}

LoadedRun load_run(const fs::path& manifest_or_dir) {
    const fs::path manifest_path =
        fs::is_directory(manifest_or_dir) ? manifest_or_dir / "manifest.json" : manifest_or_dir;
    const fs::path dir = manifest_path.parent_path();
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw IoError("cannot open run manifest " + manifest_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("corrupt run manifest " + manifest_path.string() + ": " + e.what());
    }
    LoadedRun run;
    try {
        run.manifest.run_name = j.value("run_name", "");
        run.manifest.seed = j.value("seed", std::uint64_t{0});
        read_columns(j.at("columns").at("inputs"), run.manifest.input_names, run.manifest.input_units);
        read_columns(j.at("columns").at("outputs"), run.manifest.output_names, run.manifest.output_units);
        if (j.contains("preprocessing")) {
            run.manifest.preprocessing = j["preprocessing"].get<std::vector<std::string>>();
        }
        if (j.contains("attributes")) {
            run.manifest.attributes = j["attributes"].get<std::map<std::string, std::string>>();
        }
    } catch (const json::exception& e) {
        throw ValidationError("run manifest " + manifest_path.string() + ": " + e.what());
    }
    const std::size_t d_in = run.manifest.input_names.size();
    const std::size_t d_out = run.manifest.output_names.size();
    if (d_in == 0 || d_out == 0) throw ValidationError("run manifest declares no input or output columns");

    std::map<std::size_t, std::string> files;
    for (const auto& e : j.value("stages", json::array())) {
        const auto index = e.at("index").get<std::size_t>();
        if (!files.emplace(index, e.at("file").get<std::string>()).second) {
            throw ValidationError("run manifest lists stage " + std::to_string(index) + " twice");
        }
    }
    if (files.empty()) throw ValidationError("run manifest " + manifest_path.string() + " lists no stages");

    std::size_t next = 0;
    for (const auto& [index, file] : files) {
        const std::string where = "stage " + std::to_string(index);
        std::ifstream csv(dir / file, std::ios::binary);
        if (!csv) throw IoError(where + ": missing data file " + (dir / file).string());
        std::string line;
        if (!std::getline(csv, line)) throw ValidationError(where + ": empty data file");
        if (split_csv_line(line).size() != d_in + d_out) {
            throw ValidationError(where + ": header has " + std::to_string(split_csv_line(line).size()) +
                                  " columns, manifest declares " + std::to_string(d_in + d_out));
        }
        std::vector<double> xs, ys;
        std::size_t rows = 0;
        while (std::getline(csv, line)) {
            if (line.empty() || line == "\r") continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != d_in + d_out) {
                throw ValidationError(where + ": row " + std::to_string(rows + 1) + " has " +
                                      std::to_string(cells.size()) + " columns");
            }
            for (std::size_t c = 0; c < cells.size(); ++c) {
                double v;
                try {
                    v = parse_double(cells[c]);
                } catch (const ValidationError&) {
                    throw ValidationError(where + ": row " + std::to_string(rows + 1) + ": bad value '" +
                                          cells[c] + "'");
                }
                (c < d_in ? xs : ys).push_back(v);
            }
            ++rows;
        }
        StageDataset s;
        s.stage_index = next;
        s.inputs = Tensor(rows, d_in, std::move(xs));
        s.outputs = Tensor(rows, d_out, std::move(ys));
        s.input_names = run.manifest.input_names;
        s.output_names = run.manifest.output_names;
        s.input_units = run.manifest.input_units;
        s.output_units = run.manifest.output_units;
        try {
            s.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (index != next) {
            run.reindexed[index] = next;
            run.warnings.push_back("stage " + std::to_string(index) + " re-indexed to " + std::to_string(next) +
                                   " to close a gap");
        }
        run.stages.push_back(std::move(s));
        ++next;
    }
    return run;
}

}  // namespace dtlife
