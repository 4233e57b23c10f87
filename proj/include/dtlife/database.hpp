#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dtlife/fnn.hpp"

namespace dtlife {

/// Stored DT configurations keyed by contiguous stage index, bound to one FNN.
class ConfigDatabase {
public:
    ConfigDatabase() = default;
    explicit ConfigDatabase(FnnSpec spec) : spec_(std::move(spec)) {}

    const FnnSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t next_index() const noexcept { return entries_.size(); }

    /// Appends a snapshot; its stage index must equal next_index().
    void append(ConfigSnapshot snapshot);
    const ConfigSnapshot& at(std::size_t stage) const;
    const ConfigSnapshot& back() const;
    std::vector<ConfigSnapshot> snapshots() const;
    const std::map<std::size_t, ConfigSnapshot>& entries() const noexcept { return entries_; }

    /// Free-form metadata persisted with the database.
    std::map<std::string, std::string> attributes;

private:
    FnnSpec spec_;
    std::map<std::size_t, ConfigSnapshot> entries_;
};

/// `manifest.json` plus `theta_<i>.bin` per stage: raw little-endian doubles
/// in flatten order.
void save_database(const ConfigDatabase& db, const std::filesystem::path& dir);
/// Loads a database; when `expected` is given its hash must match.
ConfigDatabase load_database(const std::filesystem::path& dir, const FnnSpec* expected = nullptr);

void write_doubles_le(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> read_doubles_le(const std::filesystem::path& file);

}  // namespace dtlife
