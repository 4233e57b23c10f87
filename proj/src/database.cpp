#include "dtlife/database.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dtlife/error.hpp"

namespace dtlife {

namespace fs = std::filesystem;
using nlohmann::json;

void ConfigDatabase::append(ConfigSnapshot snapshot) {
    if (snapshot.stage_index != next_index()) {
        throw ValidationError("configuration database expects stage " + std::to_string(next_index()) +
                              ", got stage " + std::to_string(snapshot.stage_index));
    }
    if (!snapshot.matches(spec_)) {
        throw DimensionError("snapshot for stage " + std::to_string(snapshot.stage_index) +
                             " does not match FNN " + spec_.dims_string());
    }
    if (snapshot.spec_hash.empty()) snapshot.spec_hash = spec_.hash();
    const std::size_t index = snapshot.stage_index;
    entries_.emplace(index, std::move(snapshot));
}

const ConfigSnapshot& ConfigDatabase::at(std::size_t stage) const {
    auto it = entries_.find(stage);
    if (it == entries_.end()) throw ValidationError("no stored configuration for stage " + std::to_string(stage));
    return it->second;
}

const ConfigSnapshot& ConfigDatabase::back() const {
    if (entries_.empty()) throw ValidationError("configuration database is empty");
    return entries_.rbegin()->second;
}

std::vector<ConfigSnapshot> ConfigDatabase::snapshots() const {
    std::vector<ConfigSnapshot> out;
    out.reserve(entries_.size());
    for (const auto& [i, s] : entries_) out.push_back(s);
    return out;
}

void write_doubles_le(const fs::path& file, std::span<const double> values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + file.string());
}

std::vector<double> read_doubles_le(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 8 != 0) {
        throw ValidationError("corrupt parameter file " + file.string() + ": size not a multiple of 8");
    }
    std::vector<double> values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        values[i] = std::bit_cast<double>(bits);
    }
    return values;
}

namespace {

std::string theta_file(std::size_t stage) { return "theta_" + std::to_string(stage) + ".bin"; }

}  // namespace

void save_database(const ConfigDatabase& db, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create database directory " + dir.string() + ": " + ec.message());
    json j;
    j["format"] = "dtlife-config-db/1";
    j["fnn_dims"] = db.spec().layer_dims;
    j["spec_hash"] = db.spec().hash();
    j["attributes"] = db.attributes;
    j["entries"] = json::array();
    for (const auto& [stage, snap] : db.entries()) {
        const auto flat = snap.flat();
        write_doubles_le(dir / theta_file(stage), flat);
        j["entries"].push_back({{"stage", stage}, {"file", theta_file(stage)}, {"params", flat.size()}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for database manifest");
}

ConfigDatabase load_database(const fs::path& dir, const FnnSpec* expected) {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw IoError("cannot open database manifest in " + dir.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("corrupt database manifest in " + dir.string() + ": " + e.what());
    }
    try {
        FnnSpec spec{j.at("fnn_dims").get<std::vector<std::size_t>>()};
        spec.validate();
        const auto stored_hash = j.at("spec_hash").get<std::string>();
        if (stored_hash != spec.hash()) {
            throw ValidationError("database manifest hash " + stored_hash + " does not match its dims " +
                                  spec.dims_string());
        }
        if (expected && expected->hash() != stored_hash) {
            throw ValidationError("spec-hash mismatch: database built for FNN " + spec.dims_string() +
                                  ", expected " + expected->dims_string());
        }
        ConfigDatabase db(spec);
        if (j.contains("attributes")) db.attributes = j["attributes"].get<std::map<std::string, std::string>>();
        for (const auto& e : j.at("entries")) {
            const auto stage = e.at("stage").get<std::size_t>();
            const auto values = read_doubles_le(dir / e.at("file").get<std::string>());
            if (values.size() != spec.param_count()) {
                throw ValidationError("corrupt parameter file for stage " + std::to_string(stage) + ": " +
                                      std::to_string(values.size()) + " values, expected " +
                                      std::to_string(spec.param_count()));
            }
            db.append(snapshot_from_flat(spec, values, stage));
        }
        return db;
    } catch (const json::exception& e) {
        throw ValidationError("database manifest in " + dir.string() + ": " + e.what());
    }
}

}  // namespace dtlife
