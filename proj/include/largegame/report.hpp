#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "largegame/measure.hpp"

namespace largegame {

inline constexpr int kReportDigits = 12;

// x rounded to `digits` significant digits, so serializers print it short.
inline double round_significant(double x, int digits = kReportDigits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return std::stod(buf);
}

inline std::string format_significant(double x, int digits = kReportDigits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

// label -> weight map, weights at 12 significant digits
inline nlohmann::ordered_json measure_to_json(const Measure& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < m.size(); ++i) j[m.space()->label(i)] = round_significant(m[i]);
  return j;
}

// One row of an experiment: a size n, named numeric values in insertion
// order, and a flag with an optional note for failed or suspect runs.
struct Record {
  std::size_t n = 0;
  std::vector<std::pair<std::string, double>> values;
  bool flagged = false;
  std::string note;

  Record& set(const std::string& key, double v) {
    for (auto& [k, x] : values)
      if (k == key) {
        x = v;
        return *this;
      }
    values.emplace_back(key, v);
    return *this;
  }

  std::optional<double> get(const std::string& key) const {
    for (const auto& [k, x] : values)
      if (k == key) return x;
    return std::nullopt;
  }

  double at(const std::string& key) const {
    auto v = get(key);
    if (!v) throw std::out_of_range("record has no value '" + key + "'");
    return *v;
  }
};

struct ExperimentReport {
  std::string kind;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<Record> records;  // per-n aggregates, ordered by n
  std::vector<Record> trials;   // per-(n, trial) rows, ordered by (n, trial)

  const Record* find(std::size_t n) const {
    for (const auto& r : records)
      if (r.n == n) return &r;
    return nullptr;
  }
};

namespace detail {

inline nlohmann::ordered_json number_or_null(double x) {
  if (std::isfinite(x)) return round_significant(x);
  return nullptr;
}

inline nlohmann::ordered_json record_to_json(const Record& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  for (const auto& [k, v] : r.values) j[k] = number_or_null(v);
  if (r.flagged) j["flagged"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline std::string csv_table(const std::vector<Record>& rows) {
  std::vector<std::string> columns;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.values)
      if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
  std::ostringstream os;
  os << "n";
  for (const auto& c : columns) os << "," << c;
  os << ",flagged\n";
  for (const auto& r : rows) {
    os << r.n;
    for (const auto& c : columns) {
      os << ",";
      if (auto v = r.get(c)) os << format_significant(*v);
    }
    os << "," << (r.flagged ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = report.kind;
  j["metadata"] = report.metadata;
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) j["records"].push_back(detail::record_to_json(r));
  j["trials"] = nlohmann::ordered_json::array();
  for (const auto& r : report.trials) j["trials"].push_back(detail::record_to_json(r));
  return j;
}

// Flat comma-separated table of the per-n records.
inline std::string report_to_csv(const ExperimentReport& report) {
  return detail::csv_table(report.records);
}

inline std::string trials_to_csv(const ExperimentReport& report) {
  return detail::csv_table(report.trials);
}

}  // namespace largegame
