#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tubesim {

struct ReportError : std::runtime_error {
  explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

// Locale-free numeric formatting: %.12g always uses '.' in the "C" locale.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}
inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

// CSV with a header row; cells are pre-formatted strings so the body is
// byte-stable for identical inputs.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : out_(path), columns_(header.size()) {
    if (!out_) throw ReportError(path.string() + ": cannot open for writing");
    write_cells(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
      throw ReportError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(columns_));
    write_cells(cells);
  }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  size_t columns_;
};

// Provenance for one invocation. Written before any result file; censoring
// rates are filled in as the runs finish and the file rewritten at the end.
struct RunManifest {
  std::string config_hash;
  std::string code_version = "1.0.0";
  uint64_t seed = 0;
  std::string command;
  std::string started_at;
  std::string finished_at;
  std::vector<std::pair<double, double>> censoring;  // (epsilon, rate)

  static std::string now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  void write(const std::filesystem::path& dir) const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["code_version"] = code_version;
    j["seed"] = seed;
    j["command"] = command;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    nlohmann::json c = nlohmann::json::array();
    for (const auto& [eps, rate] : censoring) c.push_back({{"epsilon", eps}, {"rate", rate}});
    j["censoring"] = c;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ReportError((dir / "manifest.json").string() + ": cannot open for writing");
    out << j.dump(2) << '\n';
  }
};

}  // namespace tubesim
