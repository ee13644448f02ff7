#pragma once

// CSV tables with round-trip number formatting, JSON sidecars, and the
// output-directory rule (flag, then QBMON_OUT_DIR, then config).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qbmon/errors.hpp"
#include "qbmon/hilbert.hpp"

#ifndef QBMON_VERSION
#define QBMON_VERSION "0.0.0"
#endif

namespace qbmon::harness {

using Json = nlohmann::ordered_json;

inline constexpr const char* kOutDirEnv = "QBMON_OUT_DIR";

// 17 significant digits; NaN for anything non-finite.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

inline std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "NaN";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) {
      throw std::invalid_argument("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(cells));
  }

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  std::string str() const {
    std::string out;
    append_line(out, columns_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << str();
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote(cells[i]);
    }
    out += '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                                const std::string& configured) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return configured;
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("output.dir", "cannot create output directory '" + dir.string() + "'");
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json software_info() {
  return Json{{"name", "qbmon"}, {"version", QBMON_VERSION}};
}

inline Json tolerance_info() {
  return Json{{"hilbert", {{"norm", tol::kNorm}, {"hermitian", tol::kHermitian},
                           {"trace", tol::kTrace}, {"positivity", tol::kPositivity}}},
              {"lindblad", {{"trace_renormalize", 1e-9}, {"trace_abort", 1e-6},
                            {"positivity_abort", 1e-6}}},
              {"trajectories", {{"homodyne_norm_abort", 0.1}, {"photodetection_bisection_steps", 60}}},
              {"thermo", {{"ergotropy_clamp", 1e-10}, {"ratio_floor", 1e-9},
                          {"efficiency_degenerate", 1e-12}}},
              {"harness", {{"fock_tail_warning", 1e-6}}}};
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace qbmon::harness
