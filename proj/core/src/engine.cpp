#include "nsoinn/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "json.hpp"
#include "nsoinn/binary_io.hpp"
#include "nsoinn/error.hpp"
#include "random.hpp"

namespace nsoinn {
namespace {

constexpr Magic kEngineMagic = {'N', 'S', 'O', 'I', 'N', 'N', 'E', 'N'};

SvmParams resolve_svm(SvmParams p, std::size_t dimension) {
  if (p.kernel.type == Kernel::Type::Rbf && !(p.kernel.gamma > 0.0)) {
    p.kernel.gamma = 1.0 / static_cast<double>(dimension);
  }
  return p;
}

SoinnParams with_cap(SoinnParams p, std::uint32_t cap) {
  p.win_cap = cap;
  return p;
}

void check_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
  }
}

template <class T>
void read_opt(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

// Runs tasks on up to `threads` workers; rethrows the first failure.
void run_parallel(std::vector<std::function<void()>>& tasks, std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  if (threads <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        try {
          tasks[i]();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void EngineConfig::validate() const {
  if (classes.size() < 2) throw ConfigError("engine needs at least two classes");
  std::set<ClassLabel> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size()) throw ConfigError("engine classes must be distinct");
  if (positive_win_cap >= negative_win_cap) {
    throw ConfigError("positive SOINN win cap (" + std::to_string(positive_win_cap) +
                      ") must be lower than the negative one (" + std::to_string(negative_win_cap) +
                      ")");
  }
  if (top_m < 2 || top_m > classes.size()) {
    throw ConfigError("top_m must lie in [2, " + std::to_string(classes.size()) + "], got " +
                      std::to_string(top_m));
  }
  soinn.validate();
  SvmParams probe = svm;
  if (probe.kernel.type == Kernel::Type::Rbf && !(probe.kernel.gamma > 0.0)) probe.kernel.gamma = 1.0;
  probe.validate();
}

std::string EngineConfig::to_json() const {
  using nlohmann::json;
  json cls = json::array();
  for (const auto c : classes) cls.push_back(std::string(to_string(c)));
  const json doc{
      {"classes", cls},
      {"positive_win_cap", positive_win_cap},
      {"negative_win_cap", negative_win_cap},
      {"top_m", top_m},
      {"soinn",
       {{"age_max", soinn.age_max},
        {"lambda", soinn.lambda},
        {"neighbor_rate_divisor", soinn.neighbor_rate_divisor}}},
      {"svm",
       {{"c", svm.c},
        {"kernel", svm.kernel.type == Kernel::Type::Rbf ? "rbf" : "linear"},
        {"gamma", svm.kernel.gamma},
        {"kkt_tolerance", svm.kkt_tolerance},
        {"max_passes", svm.max_passes},
        {"max_iterations", svm.max_iterations}}},
      {"seed", seed},
      {"threads", threads},
  };
  return doc.dump(2);
}

EngineConfig EngineConfig::from_json(std::string_view text) {
  using nlohmann::json;
  EngineConfig cfg;
  try {
    const auto doc = json::parse(text);
    check_keys(doc,
               {"classes", "positive_win_cap", "negative_win_cap", "top_m", "soinn", "svm", "seed",
                "threads"},
               "engine config");
    if (doc.contains("classes")) {
      cfg.classes.clear();
      for (const auto& c : doc.at("classes")) {
        const auto label = parse_class_label(c.get<std::string>());
        if (!label) throw ConfigError("unknown class '" + c.get<std::string>() + "'");
        cfg.classes.push_back(*label);
      }
    }
    read_opt(doc, "positive_win_cap", cfg.positive_win_cap);
    read_opt(doc, "negative_win_cap", cfg.negative_win_cap);
    read_opt(doc, "top_m", cfg.top_m);
    read_opt(doc, "seed", cfg.seed);
    read_opt(doc, "threads", cfg.threads);
    if (doc.contains("soinn")) {
      const auto& s = doc.at("soinn");
      check_keys(s, {"age_max", "lambda", "neighbor_rate_divisor"}, "engine.soinn");
      read_opt(s, "age_max", cfg.soinn.age_max);
      read_opt(s, "lambda", cfg.soinn.lambda);
      read_opt(s, "neighbor_rate_divisor", cfg.soinn.neighbor_rate_divisor);
    }
    if (doc.contains("svm")) {
      const auto& s = doc.at("svm");
      check_keys(s, {"c", "kernel", "gamma", "kkt_tolerance", "max_passes", "max_iterations"},
                 "engine.svm");
      read_opt(s, "c", cfg.svm.c);
      if (s.contains("kernel")) {
        const auto k = s.at("kernel").get<std::string>();
        if (k == "rbf") {
          cfg.svm.kernel.type = Kernel::Type::Rbf;
        } else if (k == "linear") {
          cfg.svm.kernel.type = Kernel::Type::Linear;
        } else {
          throw ConfigError("unknown kernel '" + k + "'");
        }
      }
      read_opt(s, "gamma", cfg.svm.kernel.gamma);
      read_opt(s, "kkt_tolerance", cfg.svm.kkt_tolerance);
      read_opt(s, "max_passes", cfg.svm.max_passes);
      read_opt(s, "max_iterations", cfg.svm.max_iterations);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid engine config: ") + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Engine

DetectionEngine::DetectionEngine(EngineConfig config, DatasetSchema schema)
    : DetectionEngine(std::move(config), schema.dimension(), std::move(schema)) {}

DetectionEngine::DetectionEngine(EngineConfig config, std::size_t dimension)
    : DetectionEngine(std::move(config), dimension, std::nullopt) {}

DetectionEngine::DetectionEngine(EngineConfig config, std::size_t dimension,
                                 std::optional<DatasetSchema> schema)
    : config_(std::move(config)), dimension_(dimension), schema_(std::move(schema)) {
  config_.validate();
  if (dimension_ == 0) throw ConfigError("engine dimension must be positive");
  models_.reserve(config_.classes.size());
  for (const auto label : config_.classes) {
    models_.push_back({label, SoinnNetwork(dimension_, with_cap(config_.soinn, config_.positive_win_cap)),
                       SoinnNetwork(dimension_, with_cap(config_.soinn, config_.negative_win_cap)),
                       std::nullopt});
  }
}

std::size_t DetectionEngine::class_index(ClassLabel label) const {
  const auto it = std::find(config_.classes.begin(), config_.classes.end(), label);
  if (it == config_.classes.end()) {
    throw DataError("class '" + std::string(to_string(label)) + "' is not handled by this engine");
  }
  return static_cast<std::size_t>(it - config_.classes.begin());
}

void DetectionEngine::ingest(std::span<const LabeledSample> samples) {
  std::vector<std::size_t> target(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    target[i] = class_index(samples[i].y);
    if (samples[i].x.size() != dimension_) {
      throw DataError("sample dimension " + std::to_string(samples[i].x.size()) +
                      " != engine dimension " + std::to_string(dimension_));
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& m = models_[target[i]];
    m.positive.process_input(samples[i].x);
    m.negative.process_input(samples[i].x);
  }
  samples_ingested_ += samples.size();
}

void DetectionEngine::train_initial(std::span<const LabeledSample> samples) {
  std::set<ClassLabel> seen;
  for (const auto& s : samples) seen.insert(s.y);
  if (seen.size() < 2) throw DataError("initial training needs samples of at least two classes");
  ingest(samples);
  refit_svms();
}

void DetectionEngine::update(std::span<const LabeledSample> failed) {
  if (failed.empty()) return;
  ingest(failed);
  refit_svms();
}

void DetectionEngine::refit_svms() {
  const std::size_t k = models_.size();
  std::vector<std::size_t> trained;
  for (std::size_t i = 0; i < k; ++i) {
    if (models_[i].positive.node_count() > 0) trained.push_back(i);
  }
  if (trained.size() < 2) throw DataError("refit needs at least two classes with training data");

  const SvmParams base = resolve_svm(config_.svm, dimension_);
  const auto seed_for = [&](std::size_t a, std::size_t b) {
    return detail::mix_seed(config_.seed, static_cast<std::uint64_t>(models_[a].label) + 1,
                            static_cast<std::uint64_t>(models_[b].label) + 1);
  };

  std::vector<std::optional<BinarySvmModel>> binary(k);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < trained.size(); ++a) {
    for (std::size_t b = a + 1; b < trained.size(); ++b) pairs.emplace_back(trained[a], trained[b]);
  }
  std::vector<std::optional<BinarySvmModel>> pair_models(pairs.size());

  std::vector<std::function<void()>> tasks;
  for (const auto i : trained) {
    tasks.emplace_back([&, i] {
      const auto set = binary_training_set(i);
      SvmParams p = base;
      p.seed = seed_for(i, i);
      binary[i] = smo_train(set.points, set.labels, p);
    });
  }
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    tasks.emplace_back([&, t] {
      const auto set = pairwise_training_set(pairs[t].first, pairs[t].second);
      SvmParams p = base;
      p.seed = seed_for(pairs[t].first, pairs[t].second);
      pair_models[t] = smo_train(set.points, set.labels, p);
    });
  }
  run_parallel(tasks, config_.threads);

  for (std::size_t i = 0; i < k; ++i) models_[i].binary = std::move(binary[i]);
  pairwise_.clear();
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    pairwise_.insert(pairs[t].first, pairs[t].second, std::move(*pair_models[t]));
  }
  fitted_ = true;
}

SvmTrainingSet DetectionEngine::binary_training_set(std::size_t class_index) const {
  if (class_index >= models_.size()) throw InvariantError("class index out of range");
  SvmTrainingSet set;
  set.points = models_[class_index].positive.export_nodes();
  set.labels.assign(set.points.size(), 1);
  // Negatives go in label order so the set does not depend on class enumeration.
  std::vector<std::size_t> others(models_.size());
  std::iota(others.begin(), others.end(), std::size_t{0});
  std::sort(others.begin(), others.end(),
            [&](std::size_t a, std::size_t b) { return models_[a].label < models_[b].label; });
  for (const auto j : others) {
    if (j == class_index || models_[j].positive.node_count() == 0) continue;
    auto neg = models_[j].negative.export_nodes();
    set.labels.insert(set.labels.end(), neg.size(), -1);
    set.points.insert(set.points.end(), std::make_move_iterator(neg.begin()),
                      std::make_move_iterator(neg.end()));
  }
  return set;
}

SvmTrainingSet DetectionEngine::pairwise_training_set(std::size_t i, std::size_t j) const {
  if (i >= j || j >= models_.size()) throw InvariantError("pairwise training set needs i < j < k");
  SvmTrainingSet set;
  set.points = models_[i].positive.export_nodes();
  set.labels.assign(set.points.size(), 1);
  auto other = models_[j].positive.export_nodes();
  set.labels.insert(set.labels.end(), other.size(), -1);
  set.points.insert(set.points.end(), std::make_move_iterator(other.begin()),
                    std::make_move_iterator(other.end()));
  return set;
}

Prediction DetectionEngine::predict(std::span<const double> x) const {
  if (!fitted_) throw InvariantError("predict called on an unfitted engine");
  if (x.size() != dimension_) {
    throw DataError("query dimension " + std::to_string(x.size()) + " != engine dimension " +
                    std::to_string(dimension_));
  }
  const std::size_t k = models_.size();
  Prediction p;
  p.scores.assign(k, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < k; ++i) {
    if (!models_[i].binary) continue;
    p.scores[i] = models_[i].binary->decision_value(x);
    ranked.push_back(i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return p.scores[a] > p.scores[b]; });
  ranked.resize(std::min(config_.top_m, ranked.size()));

  std::vector<double> candidate_scores;
  for (const auto i : ranked) candidate_scores.push_back(p.scores[i]);
  const auto vote = pairwise_vote(pairwise_, ranked, x, candidate_scores);

  p.label = models_[vote.winner].label;
  for (const auto i : ranked) p.top_m.push_back(models_[i].label);
  p.votes = vote.tally;
  return p;
}

// ---------------------------------------------------------------------------
// Persistence

std::vector<std::uint8_t> DetectionEngine::snapshot() const {
  ByteWriter w;
  w.str(config_.to_json());
  w.u8(schema_ ? 1 : 0);
  if (schema_) w.str(schema_->to_json());
  w.u64(dimension_);
  w.u64(samples_ingested_);
  w.u8(fitted_ ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(models_.size()));
  for (const auto& m : models_) {
    w.u8(static_cast<std::uint8_t>(m.label));
    m.positive.write(w);
    m.negative.write(w);
    w.u8(m.binary ? 1 : 0);
    if (m.binary) m.binary->write(w);
  }
  w.u64(pairwise_.size());
  for (const auto& [key, model] : pairwise_.models()) {
    w.u64(key.first);
    w.u64(key.second);
    model.write(w);
  }
  return frame_payload(kEngineMagic, kSnapshotVersion, w.bytes());
}

DetectionEngine DetectionEngine::from_snapshot(std::span<const std::uint8_t> bytes) {
  const auto payload = unframe_payload(bytes, kEngineMagic, kSnapshotVersion, "engine snapshot");
  ByteReader r(payload);
  EngineConfig config;
  std::optional<DatasetSchema> schema;
  try {
    config = EngineConfig::from_json(r.str());
    if (r.u8() != 0) schema = DatasetSchema::from_json(r.str());
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("engine snapshot config: ") + e.what());
  }
  const auto dimension = r.u64();
  DetectionEngine engine = [&] {
    try {
      return DetectionEngine(config, dimension, schema);
    } catch (const ConfigError& e) {
      throw CorruptionError(std::string("engine snapshot config: ") + e.what());
    }
  }();
  engine.samples_ingested_ = r.u64();
  engine.fitted_ = r.u8() != 0;
  const auto k = r.u32();
  if (k != engine.models_.size()) throw CorruptionError("engine snapshot class count mismatch");
  for (auto& m : engine.models_) {
    if (r.u8() != static_cast<std::uint8_t>(m.label)) {
      throw CorruptionError("engine snapshot class order mismatch");
    }
    m.positive = SoinnNetwork::read(r);
    m.negative = SoinnNetwork::read(r);
    if (r.u8() != 0) m.binary = BinarySvmModel::read(r);
  }
  const auto pairs = r.u64();
  for (std::uint64_t t = 0; t < pairs; ++t) {
    const auto i = r.u64();
    const auto j = r.u64();
    if (i >= j || j >= k) throw CorruptionError("engine snapshot has an invalid pairwise key");
    engine.pairwise_.insert(i, j, BinarySvmModel::read(r));
  }
  if (!r.at_end()) throw CorruptionError("engine snapshot has trailing bytes");
  return engine;
}

void DetectionEngine::save(const std::filesystem::path& path) const {
  write_file_bytes(path, snapshot());
}

DetectionEngine DetectionEngine::load(const std::filesystem::path& path) {
  return from_snapshot(read_file_bytes(path));
}

}  // namespace nsoinn
