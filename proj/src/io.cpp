#include "sphereflow/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "sphereflow/errors.hpp"

namespace sphereflow {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

CsvTable::Row& CsvTable::Row::operator<<(double v) {
  cells_.push_back(format_double(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::int64_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::size_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(const std::string& v) {
  cells_.push_back(quote(v));
  return *this;
}

CsvTable::Row& CsvTable::add_row() { return rows_.emplace_back(); }

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + quote(header_[i]);
  out += '\n';
  for (const Row& r : rows_) {
    require(r.cells_.size() == header_.size(), ErrorCode::InvalidArgument,
            "CSV row has " + std::to_string(r.cells_.size()) + " cells, header has " + std::to_string(header_.size()));
    for (std::size_t i = 0; i < r.cells_.size(); ++i) {
      if (i) out += ',';
      out += r.cells_[i];
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const fs::path& path) const {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << str();
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

CsvTable trajectory_table(const Trajectory& traj) {
  CsvTable t({"step", "t", "gl_energy", "dirichlet_energy", "penalty_increment", "max_norm", "exponent", "speed_sq",
              "exponent_term"});
  for (const StepRecord& r : traj.records) {
    t.add_row() << r.step << r.t << r.gl_energy << r.dirichlet_energy << r.penalty_increment << r.max_norm
                << r.exponent << r.speed_sq << r.exponent_term;
  }
  return t;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

void write_snapshot(const fs::path& bin_path, const SphereField& field, const nlohmann::json& sidecar) {
  std::ofstream out = open_out(bin_path, std::ios::out | std::ios::binary);
  const auto& v = field.values();
  std::vector<unsigned char> bytes(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "failed writing " + bin_path.string());
  fs::path side = bin_path;
  side.replace_extension(".json");
  write_json(side, sidecar);
}

SphereField read_snapshot(const fs::path& bin_path, GridPtr grid) {
  fs::path side = bin_path;
  side.replace_extension(".json");
  const nlohmann::json meta = read_json(side);
  const int D = meta.at("D").get<int>();
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + bin_path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t n = grid->size() * static_cast<std::size_t>(D + 1);
  require(bytes.size() == n * 8, ErrorCode::GridMismatch,
          bin_path.string() + " holds " + std::to_string(bytes.size() / 8) + " values, grid needs " +
              std::to_string(n));
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return SphereField(std::move(grid), D, std::move(values));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail(ErrorCode::Io, "SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

fs::path Manifest::path(const std::string& relative) {
  const fs::path p = root_ / relative;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void Manifest::add(const std::string& relative, const std::string& kind) { entries_.emplace_back(relative, kind); }

nlohmann::json Manifest::write(const nlohmann::json& extra) const {
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& [rel, kind] : entries_) {
    const fs::path p = root_ / rel;
    artifacts.push_back({{"path", rel}, {"kind", kind}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  nlohmann::json j = extra;
  j["artifacts"] = artifacts;
  write_json(root_ / "manifest.json", j);
  return j;
}

}  // namespace sphereflow
