#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphereflow/field.hpp"
#include "sphereflow/flow.hpp"

namespace sphereflow {

namespace fs = std::filesystem;

/// Shortest round-trip text for a double ("%.17g"); "nan"/"inf" spelled out.
std::string format_double(double v);

/// RFC-4180 table with a header row and '\n' line ends.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v);
    Row& operator<<(std::int64_t v);
    Row& operator<<(std::size_t v);
    Row& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
    Row& operator<<(bool v) { return *this << static_cast<std::int64_t>(v ? 1 : 0); }
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  Row& add_row();
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;
  void write(const fs::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Per-step records of a trajectory.
CsvTable trajectory_table(const Trajectory& traj);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// Little-endian float64 values, node-major then component-major, plus a
/// JSON sidecar next to it (same stem, ".json").
void write_snapshot(const fs::path& bin_path, const SphereField& field, const nlohmann::json& sidecar);
SphereField read_snapshot(const fs::path& bin_path, GridPtr grid);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Files written under one root directory, listed with their checksums.
class Manifest {
 public:
  explicit Manifest(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  /// Path for a new artifact relative to the root; creates parent directories.
  fs::path path(const std::string& relative);
  void add(const std::string& relative, const std::string& kind);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  /// Writes manifest.json with sha256 and size of every entry.
  nlohmann::json write(const nlohmann::json& extra = nlohmann::json::object()) const;

 private:
  fs::path root_;
  std::vector<std::pair<std::string, std::string>> entries_;  // (relative path, kind)
};

}  // namespace sphereflow
