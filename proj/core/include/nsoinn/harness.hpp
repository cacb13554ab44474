#pragma once

// Validation/update workflow and the incremental-learning experiment:
// initial training, r test-then-feed-back rounds, and the one-shot offline
// baseline trained on the same sample multiset.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsoinn/dataset.hpp"
#include "nsoinn/engine.hpp"

namespace nsoinn {

enum class ReportFormat : std::uint8_t { Csv, Json };
enum class TimingMode : std::uint8_t { Wall, Off };  // Off reports 0 s everywhere

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept;

struct ExperimentConfig {
  std::filesystem::path initial_path;  // initial training records
  std::filesystem::path rounds_path;   // records split into update rounds
  std::filesystem::path mapping_path;  // attack-name -> class table
  std::size_t rounds = 5;
  std::uint64_t seed = 0;  // subsampling, optional shuffle, SVM seeds
  bool shuffle = false;
  std::optional<std::size_t> initial_size;  // stratified desk-scale subsample
  std::optional<std::size_t> round_size;    // per round
  std::vector<std::string> categorical_attributes = default_categorical_attributes();
  std::optional<ClassLabel> unmapped_fallback;
  EngineConfig engine;
  ReportFormat report_format = ReportFormat::Csv;
  TimingMode timing = TimingMode::Wall;
  std::filesystem::path output_dir = "out";

  void validate() const;

  // Relative paths inside the document resolve against `base_dir`.
  static ExperimentConfig from_json(std::string_view text,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

using ConfusionMatrix = std::array<std::array<std::uint64_t, kClassLabelCount>, kClassLabelCount>;

struct RoundReport {
  std::size_t round = 0;  // 0 = initial training
  double accuracy_pct = 0.0;
  double time_s = 0.0;
  std::uint64_t cumulative_samples = 0;
  std::uint64_t failures = 0;
  std::uint64_t evaluated = 0;
  ConfusionMatrix confusion{};  // [truth][predicted]

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

struct ValidationResult {
  double accuracy_pct = 0.0;
  std::vector<std::size_t> failed;  // indices whose prediction != truth, in order
};

ValidationResult validate(std::span<const Prediction> predictions, std::span<const ClassLabel> truths);
ValidationResult validate(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truths);

std::vector<Prediction> predict_all(const DetectionEngine& engine,
                                    std::span<const LabeledSample> samples);

// Encoded experiment inputs. Lines refer to 1-based lines of the source files.
struct PreparedData {
  DatasetSchema schema;
  AttackCategoryMap mapping;
  std::vector<LabeledSample> initial;
  std::vector<std::size_t> initial_lines;
  std::vector<std::vector<LabeledSample>> rounds;
  std::vector<std::vector<std::size_t>> round_lines;
  std::size_t initial_file_records = 0;
  std::size_t rounds_file_records = 0;

  // Records taking part in the experiment (initial set plus all rounds).
  std::size_t total_records() const noexcept;
};

// Parses both files, subsamples when sizes are configured, fits the schema on
// the initial set only and splits the round records.
PreparedData prepare_data(const ExperimentConfig& config);

// Order-independent digest of a sample multiset: per-sample FNV-1a hashes,
// sorted, then hashed again.
std::uint64_t multiset_digest(std::span<const LabeledSample> samples);

// Final-round figures of an online run, carried to the offline report.
struct OnlineSummary {
  double final_accuracy_pct = 0.0;
  double total_time_s = 0.0;
  std::uint64_t final_failures = 0;
  std::uint64_t final_evaluated = 0;

  friend bool operator==(const OnlineSummary&, const OnlineSummary&) = default;
};

// Which records an online run trained on; written next to the reports so
// the offline baseline can rebuild the same multiset.
struct TrainingManifest {
  std::string initial_source;
  std::string rounds_source;
  std::vector<std::size_t> initial_lines;
  std::vector<std::vector<std::size_t>> failure_lines;  // per round
  std::uint64_t sample_count = 0;
  std::uint64_t digest = 0;
  std::optional<OnlineSummary> online;

  std::string to_json() const;
  static TrainingManifest from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static TrainingManifest load(const std::filesystem::path& path);

  friend bool operator==(const TrainingManifest&, const TrainingManifest&) = default;
};

struct OnlineHooks {
  // Called with each scored subset's predictions (round 0 and 1 share them).
  std::function<void(std::size_t, std::span<const Prediction>)> on_predictions;
  // Called with the round index and the round-subset indices handed to update().
  std::function<void(std::size_t, std::span<const std::size_t>)> on_update;
};

struct OnlineResult {
  std::vector<RoundReport> reports;
  DetectionEngine engine;
  TrainingManifest manifest;
  std::vector<LabeledSample> training_multiset;  // initial + every fed-back failure
};

// Round 0 trains on the initial set and is scored on round subset 1. Round i
// scores subset i before updating, then feeds only its failures back.
OnlineResult run_online_experiment(const ExperimentConfig& config, const PreparedData& data,
                                   const OnlineHooks& hooks = {});
OnlineResult run_online_experiment(const ExperimentConfig& config);

struct EvaluationSet {
  std::string name;
  std::vector<LabeledSample> samples;
};

struct BaselineEvaluation {
  std::string name;
  RoundReport report;  // cumulative_samples = training multiset size
};

struct OfflineResult {
  double train_time_s = 0.0;
  std::uint64_t training_samples = 0;
  std::uint64_t digest = 0;
  std::vector<BaselineEvaluation> evaluations;
  std::optional<OnlineSummary> online;  // copied from the manifest when present
};

// Fresh engine, one train_initial over the whole multiset, then scoring.
OfflineResult run_offline_baseline(const ExperimentConfig& config, const DatasetSchema& schema,
                                   std::span<const LabeledSample> training,
                                   std::span<const EvaluationSet> eval_sets);

// Rebuilds the multiset named by `manifest` from `data`, checks its digest and
// evaluates on the union of all rounds and on the final round.
OfflineResult run_offline_baseline(const ExperimentConfig& config, const PreparedData& data,
                                   const TrainingManifest& manifest);

}  // namespace nsoinn
