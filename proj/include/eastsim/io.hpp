#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "eastsim/core.hpp"

// CSV / JSON output helpers. Floats are emitted with 17 significant digits
// so that parsing them back reproduces the exact double.

namespace eastsim {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal RFC-style quoting: only fields containing separators/quotes are
// wrapped. Numeric output never needs it.
inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << header << '\n';
  }

  using Cell = std::variant<long long, double, std::string>;

  void row(const std::vector<Cell>& cells) {
    bool first = true;
    for (const auto& cell : cells) {
      if (!first) out_ << ',';
      first = false;
      if (std::holds_alternative<long long>(cell))
        out_ << std::get<long long>(cell);
      else if (std::holds_alternative<double>(cell))
        out_ << format_g17(std::get<double>(cell));
      else
        out_ << csv_quote(std::get<std::string>(cell));
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

// Record serialization: `site,time,outcome` rows (1-based indices), with an
// optional trajectory id column for batches.
inline void write_record_csv(const std::filesystem::path& path, const MeasurementRecord& record) {
  CsvWriter csv(path, "site,time,outcome");
  for (int t = 1; t <= record.steps; ++t)
    for (int i = 1; i <= record.sites; ++i)
      csv.row({static_cast<long long>(i), static_cast<long long>(t),
               static_cast<long long>(record.at(i, t))});
}

inline void write_record_batch_csv(const std::filesystem::path& path,
                                   const std::vector<MeasurementRecord>& records,
                                   const std::vector<long long>& trajectory_ids) {
  CsvWriter csv(path, "site,time,outcome,trajectory_id");
  for (std::size_t r = 0; r < records.size(); ++r)
    for (int t = 1; t <= records[r].steps; ++t)
      for (int i = 1; i <= records[r].sites; ++i)
        csv.row({static_cast<long long>(i), static_cast<long long>(t),
                 static_cast<long long>(records[r].at(i, t)), trajectory_ids[r]});
}

inline void write_occupations_csv(const std::filesystem::path& path, int sites, int steps,
                                  const std::vector<double>& occupations) {
  CsvWriter csv(path, "site,time,expectation");
  for (int t = 1; t <= steps; ++t)
    for (int i = 1; i <= sites; ++i)
      csv.row({static_cast<long long>(i), static_cast<long long>(t),
               occupations[static_cast<std::size_t>(t - 1) * sites + (i - 1)]});
}

// Reads one record (or a batch keyed by trajectory_id) back from CSV.
inline std::vector<MeasurementRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty record file");
  const bool has_id = line.find("trajectory_id") != std::string::npos;
  struct Entry {
    long long id;
    int site, time, outcome;
  };
  std::vector<Entry> entries;
  int max_site = 0, max_time = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Entry e{0, 0, 0, 0};
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    e.site = std::stoi(field);
    std::getline(ss, field, ',');
    e.time = std::stoi(field);
    std::getline(ss, field, ',');
    e.outcome = std::stoi(field);
    if (has_id && std::getline(ss, field, ',')) e.id = std::stoll(field);
    entries.push_back(e);
    max_site = std::max(max_site, e.site);
    max_time = std::max(max_time, e.time);
  }
  std::vector<long long> ids;
  for (const auto& e : entries)
    if (ids.empty() || ids.back() != e.id) ids.push_back(e.id);
  std::vector<MeasurementRecord> records(ids.size());
  for (auto& r : records) r.resize(max_site, max_time);
  for (const auto& e : entries) {
    const std::size_t slot =
        std::find(ids.begin(), ids.end(), e.id) - ids.begin();
    records[slot].at(e.site, e.time) = static_cast<std::uint8_t>(e.outcome);
  }
  return records;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
}

}  // namespace eastsim
