#include "nsoinn/report.hpp"

#include <fmt/format.h>

#include <fstream>

#include "json.hpp"
#include "nsoinn/error.hpp"

namespace nsoinn {
namespace {

// Fixed-precision numbers keep reports byte-stable across runs and platforms.
nlohmann::ordered_json fixed(double v, int digits) {
  return nlohmann::ordered_json::parse(fmt::format("{:.{}f}", v, digits));
}

nlohmann::ordered_json confusion_json(const ConfusionMatrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : m) rows.push_back(row);
  return rows;
}

double fraction(std::uint64_t part, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(total);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report " + path.string());
  out << text;
  if (!out) throw DataError("failed writing report " + path.string());
}

}  // namespace

std::string report_extension(ReportFormat format) {
  return format == ReportFormat::Csv ? ".csv" : ".json";
}

std::string format_report(std::span<const RoundReport> reports, ReportFormat format,
                          std::size_t total_records) {
  if (format == ReportFormat::Csv) {
    std::string out = "round,accuracy_pct,time_s,cumulative_samples,failures,fraction_of_total\n";
    for (const auto& r : reports) {
      out += fmt::format("{},{:.4f},{:.3f},{},{},{:.6f}\n", r.round, r.accuracy_pct, r.time_s,
                         r.cumulative_samples, r.failures,
                         fraction(r.cumulative_samples, total_records));
    }
    return out;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    rows.push_back({{"round", r.round},
                    {"accuracy_pct", fixed(r.accuracy_pct, 4)},
                    {"time_s", fixed(r.time_s, 3)},
                    {"cumulative_samples", r.cumulative_samples},
                    {"failures", r.failures},
                    {"fraction_of_total", fixed(fraction(r.cumulative_samples, total_records), 6)},
                    {"evaluated", r.evaluated},
                    {"confusion", confusion_json(r.confusion)}});
  }
  nlohmann::ordered_json doc{{"total_records", total_records}, {"rounds", rows}};
  return doc.dump(2) + "\n";
}

void emit_report(std::span<const RoundReport> reports, ReportFormat format,
                 const std::filesystem::path& path, std::size_t total_records) {
  write_text(path, format_report(reports, format, total_records));
}

std::string format_offline_report(const OfflineResult& result, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = "eval_set,accuracy_pct,time_s,training_samples,failures,evaluated\n";
    for (const auto& e : result.evaluations) {
      out += fmt::format("{},{:.4f},{:.3f},{},{},{}\n", e.name, e.report.accuracy_pct,
                         e.report.time_s, result.training_samples, e.report.failures,
                         e.report.evaluated);
    }
    if (result.online) {
      out += fmt::format("online_final_round,{:.4f},{:.3f},{},{},{}\n", result.online->final_accuracy_pct,
                         result.online->total_time_s, result.training_samples,
                         result.online->final_failures, result.online->final_evaluated);
    }
    return out;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : result.evaluations) {
    rows.push_back({{"eval_set", e.name},
                    {"accuracy_pct", fixed(e.report.accuracy_pct, 4)},
                    {"time_s", fixed(e.report.time_s, 3)},
                    {"training_samples", result.training_samples},
                    {"failures", e.report.failures},
                    {"evaluated", e.report.evaluated},
                    {"confusion", confusion_json(e.report.confusion)}});
  }
  nlohmann::ordered_json doc{{"train_time_s", fixed(result.train_time_s, 3)},
                             {"training_samples", result.training_samples},
                             {"evaluations", rows}};
  if (result.online) {
    doc["online_final_round"] = {{"accuracy_pct", fixed(result.online->final_accuracy_pct, 4)},
                                 {"time_s", fixed(result.online->total_time_s, 3)},
                                 {"failures", result.online->final_failures},
                                 {"evaluated", result.online->final_evaluated}};
  }
  return doc.dump(2) + "\n";
}

void emit_offline_report(const OfflineResult& result, ReportFormat format,
                         const std::filesystem::path& path) {
  write_text(path, format_offline_report(result, format));
}

}  // namespace nsoinn
