#pragma once

// The n-SOINN-WTA-SVM detection engine.
//
// Every class owns two SOINNs fed with that class's samples: a fine one
// (low win cap) whose nodes are the class's positive examples, and a coarse
// one (high win cap) whose nodes serve as negative examples for the other
// classes. A one-vs-rest RBF SVM per class scores a query; the m best
// scoring classes are then settled by max-wins voting of the one-vs-one SVMs
// trained on the fine node sets.
//
// Training mutates the SOINNs and refits every SVM from the current node sets;
// predict() is const and may run concurrently between updates.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsoinn/dataset.hpp"
#include "nsoinn/soinn.hpp"
#include "nsoinn/svm.hpp"

namespace nsoinn {

struct EngineConfig {
  std::vector<ClassLabel> classes{kAllClassLabels.begin(), kAllClassLabels.end()};
  std::uint32_t positive_win_cap = 2;
  std::uint32_t negative_win_cap = 100;
  std::size_t top_m = 3;
  SoinnParams soinn;  // win_cap is overridden per polarity
  SvmParams svm;      // a non-positive RBF gamma resolves to 1/d
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // refit parallelism; 0 = hardware concurrency

  // Throws ConfigError.
  void validate() const;

  std::string to_json() const;
  static EngineConfig from_json(std::string_view text);

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct ClassModel {
  ClassLabel label;
  SoinnNetwork positive;
  SoinnNetwork negative;
  std::optional<BinarySvmModel> binary;

  friend bool operator==(const ClassModel&, const ClassModel&) = default;
};

struct Prediction {
  ClassLabel label = ClassLabel::Normal;
  std::vector<double> scores;       // per engine class; -inf when the class has no SVM
  std::vector<ClassLabel> top_m;    // descending score
  std::vector<std::size_t> votes;   // aligned with top_m

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct SvmTrainingSet {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;  // +1 / -1
};

class DetectionEngine {
 public:
  DetectionEngine(EngineConfig config, DatasetSchema schema);
  DetectionEngine(EngineConfig config, std::size_t dimension);

  // Feeds every sample into both SOINNs of its class, then refits.
  void train_initial(std::span<const LabeledSample> samples);

  // Same ingestion for confirmed failures; an empty list is a no-op.
  void update(std::span<const LabeledSample> failed);

  void refit_svms();

  // What refit_svms trains on. Binary: the class's positive nodes (+1) against
  // the negative nodes of every other trained class (-1). Pairwise (i < j):
  // positive nodes of i (+1) against positive nodes of j (-1).
  SvmTrainingSet binary_training_set(std::size_t class_index) const;
  SvmTrainingSet pairwise_training_set(std::size_t i, std::size_t j) const;

  Prediction predict(std::span<const double> x) const;

  bool fitted() const noexcept { return fitted_; }
  const EngineConfig& config() const noexcept { return config_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::optional<DatasetSchema>& schema() const noexcept { return schema_; }
  std::span<const ClassModel> class_models() const noexcept { return models_; }
  const PairwiseSvmTable& pairwise() const noexcept { return pairwise_; }
  std::uint64_t samples_ingested() const noexcept { return samples_ingested_; }
  std::size_t class_index(ClassLabel label) const;  // throws DataError when absent

  // Snapshot container (magic "NSOINNEN"), see docs/FORMATS.md.
  std::vector<std::uint8_t> snapshot() const;
  static DetectionEngine from_snapshot(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static DetectionEngine load(const std::filesystem::path& path);

  static constexpr std::uint32_t kSnapshotVersion = 1;

 private:
  DetectionEngine(EngineConfig config, std::size_t dimension, std::optional<DatasetSchema> schema);

  void ingest(std::span<const LabeledSample> samples);

  EngineConfig config_;
  std::size_t dimension_;
  std::optional<DatasetSchema> schema_;
  std::vector<ClassModel> models_;
  PairwiseSvmTable pairwise_;
  std::uint64_t samples_ingested_ = 0;
  bool fitted_ = false;
};

}  // namespace nsoinn
