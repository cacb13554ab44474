#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "nsoinn/harness.hpp"

namespace nsoinn {

// Online round table. CSV columns:
//   round,accuracy_pct,time_s,cumulative_samples,failures,fraction_of_total
// where fraction_of_total = cumulative_samples / total_records. JSON adds the
// evaluated count and the confusion matrix per round.
std::string format_report(std::span<const RoundReport> reports, ReportFormat format,
                          std::size_t total_records);

void emit_report(std::span<const RoundReport> reports, ReportFormat format,
                 const std::filesystem::path& path, std::size_t total_records);

// Offline baseline. CSV columns:
//   eval_set,accuracy_pct,time_s,training_samples,failures,evaluated
// plus an online_final_round row (total online time) when the training
// digest carried the online run's summary.
std::string format_offline_report(const OfflineResult& result, ReportFormat format);

void emit_offline_report(const OfflineResult& result, ReportFormat format,
                         const std::filesystem::path& path);

std::string report_extension(ReportFormat format);

}  // namespace nsoinn
