#include "nsoinn/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nsoinn/binary_io.hpp"
#include "nsoinn/error.hpp"
#include "random.hpp"

namespace nsoinn {
namespace {

class Stopwatch {
 public:
  explicit Stopwatch(TimingMode mode) : mode_(mode), start_(std::chrono::steady_clock::now()) {}

  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return mode_ == TimingMode::Wall ? s : 0.0;
  }

 private:
  TimingMode mode_;
  std::chrono::steady_clock::time_point start_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw DataError("digest must have 16 hex digits");
  std::uint64_t v = 0;
  for (const char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw DataError("digest has a non-hex digit");
    }
  }
  return v;
}

ConfusionMatrix confusion_of(std::span<const Prediction> preds, std::span<const LabeledSample> samples) {
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++m[static_cast<std::size_t>(samples[i].y)][static_cast<std::size_t>(preds[i].label)];
  }
  return m;
}

std::vector<ClassLabel> truths_of(std::span<const LabeledSample> samples) {
  std::vector<ClassLabel> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.y);
  return out;
}

// Re-throws an engine failure with the round index prefixed, keeping its type.
template <class F>
auto in_round(std::size_t round, F&& f) {
  const auto tag = [round](const std::exception& e) {
    return "round " + std::to_string(round) + ": " + e.what();
  };
  try {
    return f();
  } catch (const VersionMismatchError&) {
    throw;
  } catch (const CorruptionError& e) {
    throw CorruptionError(tag(e));
  } catch (const DataError& e) {
    throw DataError(tag(e));
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e));
  } catch (const InvariantError& e) {
    throw InvariantError(tag(e));
  }
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (initial_path.empty() || rounds_path.empty() || mapping_path.empty()) {
    throw ConfigError("initial_path, rounds_path and mapping_path are required");
  }
  if (initial_size && *initial_size == 0) throw ConfigError("initial_size must be positive");
  if (round_size && *round_size == 0) throw ConfigError("round_size must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  engine.validate();
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text,
                                             const std::filesystem::path& base_dir) {
  using nlohmann::json;
  ExperimentConfig cfg;
  try {
    const auto doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
    static const std::vector<std::string> allowed = {
        "initial_path", "rounds_path", "mapping_path", "rounds", "seed",
        "shuffle", "initial_size", "round_size", "categorical_attributes",
        "unmapped_fallback", "engine", "report", "timing", "output_dir"};
    for (const auto& [k, v] : doc.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        throw ConfigError("unknown key '" + k + "' in experiment config");
      }
    }
    if (doc.contains("initial_path")) {
      cfg.initial_path = resolve(base_dir, doc.at("initial_path").get<std::string>());
    }
    if (doc.contains("rounds_path")) {
      cfg.rounds_path = resolve(base_dir, doc.at("rounds_path").get<std::string>());
    }
    if (doc.contains("mapping_path")) {
      cfg.mapping_path = resolve(base_dir, doc.at("mapping_path").get<std::string>());
    }
    if (doc.contains("output_dir")) {
      cfg.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
    }
    if (doc.contains("rounds")) cfg.rounds = doc.at("rounds").get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("shuffle")) cfg.shuffle = doc.at("shuffle").get<bool>();
    for (const char* key : {"initial_size", "round_size"}) {
      if (doc.contains(key) && !doc.at(key).is_null()) {
        (std::string_view(key) == "initial_size" ? cfg.initial_size : cfg.round_size) =
            doc.at(key).get<std::size_t>();
      }
    }
    if (doc.contains("categorical_attributes")) {
      cfg.categorical_attributes = doc.at("categorical_attributes").get<std::vector<std::string>>();
    }
    if (doc.contains("unmapped_fallback") && !doc.at("unmapped_fallback").is_null()) {
      const auto name = doc.at("unmapped_fallback").get<std::string>();
      cfg.unmapped_fallback = parse_class_label(name);
      if (!cfg.unmapped_fallback) throw ConfigError("unknown fallback class '" + name + "'");
    }
    if (doc.contains("engine")) cfg.engine = EngineConfig::from_json(doc.at("engine").dump());
    if (doc.contains("report")) {
      const auto name = doc.at("report").get<std::string>();
      const auto fmt = parse_report_format(name);
      if (!fmt) throw ConfigError("unknown report format '" + name + "'");
      cfg.report_format = *fmt;
    }
    if (doc.contains("timing")) {
      const auto name = doc.at("timing").get<std::string>();
      if (name == "wall") {
        cfg.timing = TimingMode::Wall;
      } else if (name == "off") {
        cfg.timing = TimingMode::Off;
      } else {
        throw ConfigError("timing must be 'wall' or 'off'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Validation

ValidationResult validate(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truths) {
  if (predicted.size() != truths.size()) {
    throw DataError("validate: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truths.size()) + " labels");
  }
  if (truths.empty()) throw DataError("validate: no predictions");
  ValidationResult r;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predicted[i] != truths[i]) r.failed.push_back(i);
  }
  const auto correct = truths.size() - r.failed.size();
  r.accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(truths.size());
  return r;
}

ValidationResult validate(std::span<const Prediction> predictions, std::span<const ClassLabel> truths) {
  std::vector<ClassLabel> predicted;
  predicted.reserve(predictions.size());
  for (const auto& p : predictions) predicted.push_back(p.label);
  return validate(std::span<const ClassLabel>(predicted), truths);
}

std::vector<Prediction> predict_all(const DetectionEngine& engine,
                                    std::span<const LabeledSample> samples) {
  std::vector<Prediction> out(samples.size());
  std::size_t threads = engine.config().threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, samples.size() / 256));
  if (threads <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = engine.predict(samples[i].x);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (samples.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          const auto end = std::min(samples.size(), (t + 1) * chunk);
          for (std::size_t i = t * chunk; i < end; ++i) out[i] = engine.predict(samples[i].x);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data preparation

std::size_t PreparedData::total_records() const noexcept {
  std::size_t n = initial.size();
  for (const auto& r : rounds) n += r.size();
  return n;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData data;
  data.mapping = AttackCategoryMap::load(config.mapping_path);
  data.mapping.set_fallback(config.unmapped_fallback);

  const auto initial_records = parse_nslkdd(config.initial_path);
  const auto round_records = parse_nslkdd(config.rounds_path);
  data.initial_file_records = initial_records.size();
  data.rounds_file_records = round_records.size();

  const auto labels_of = [&](const std::vector<RawRecord>& recs) {
    std::vector<ClassLabel> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
      try {
        out.push_back(data.mapping.map(r.label));
      } catch (const DataError& e) {
        throw DataError("line " + std::to_string(r.line) + ": " + e.what());
      }
    }
    return out;
  };
  const auto all_indices = [](std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
  };

  const auto initial_idx =
      config.initial_size
          ? stratified_subsample(labels_of(initial_records), *config.initial_size,
                                 detail::mix_seed(config.seed, 1))
          : all_indices(initial_records.size());
  std::vector<RawRecord> initial_selected;
  initial_selected.reserve(initial_idx.size());
  for (const auto i : initial_idx) initial_selected.push_back(initial_records[i]);

  data.schema = fit_schema(initial_selected, config.categorical_attributes);
  data.initial = encode_all(initial_selected, data.schema, data.mapping);
  for (const auto& r : initial_selected) data.initial_lines.push_back(r.line);

  std::vector<std::size_t> pool;
  if (config.round_size) {
    const auto wanted = *config.round_size * config.rounds;
    pool = stratified_subsample(labels_of(round_records), wanted, detail::mix_seed(config.seed, 2));
  } else {
    pool = all_indices(round_records.size());
  }
  const auto parts = split_round_indices(
      pool.size(), config.rounds,
      config.shuffle ? std::optional<std::uint64_t>(detail::mix_seed(config.seed, 3)) : std::nullopt);
  for (const auto& part : parts) {
    auto& samples = data.rounds.emplace_back();
    auto& lines = data.round_lines.emplace_back();
    samples.reserve(part.size());
    for (const auto p : part) {
      const auto& rec = round_records[pool[p]];
      samples.push_back(encode(rec, data.schema, data.mapping));
      lines.push_back(rec.line);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Training manifest

std::uint64_t multiset_digest(std::span<const LabeledSample> samples) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(samples.size());
  ByteWriter w;
  for (const auto& s : samples) {
    ByteWriter one;
    one.u8(static_cast<std::uint8_t>(s.y));
    one.f64s(s.x);
    hashes.push_back(fnv1a64(one.bytes()));
  }
  std::sort(hashes.begin(), hashes.end());
  for (const auto h : hashes) w.u64(h);
  return fnv1a64(w.bytes());
}

std::string TrainingManifest::to_json() const {
  nlohmann::json doc{{"format", "nsoinn-training-digest"},
                           {"version", 1},
                           {"initial_source", initial_source},
                           {"rounds_source", rounds_source},
                           {"initial_lines", initial_lines},
                           {"failure_lines", failure_lines},
                           {"sample_count", sample_count},
                           {"digest", hex64(digest)}};
  if (online) {
    doc["online"] = {{"final_accuracy_pct", online->final_accuracy_pct},
                     {"total_time_s", online->total_time_s},
                     {"final_failures", online->final_failures},
                     {"final_evaluated", online->final_evaluated}};
  }
  return doc.dump();
}

TrainingManifest TrainingManifest::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "nsoinn-training-digest") {
      throw DataError("not a training digest file");
    }
    if (doc.at("version").get<std::uint32_t>() != 1) {
      throw VersionMismatchError("training digest", doc.at("version").get<std::uint32_t>(), 1);
    }
    TrainingManifest m;
    m.initial_source = doc.at("initial_source").get<std::string>();
    m.rounds_source = doc.at("rounds_source").get<std::string>();
    m.initial_lines = doc.at("initial_lines").get<std::vector<std::size_t>>();
    m.failure_lines = doc.at("failure_lines").get<std::vector<std::vector<std::size_t>>>();
    m.sample_count = doc.at("sample_count").get<std::uint64_t>();
    m.digest = parse_hex64(doc.at("digest").get<std::string>());
    if (doc.contains("online")) {
      const auto& o = doc.at("online");
      m.online = OnlineSummary{o.at("final_accuracy_pct").get<double>(), o.at("total_time_s").get<double>(),
                               o.at("final_failures").get<std::uint64_t>(),
                               o.at("final_evaluated").get<std::uint64_t>()};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid training digest: ") + e.what());
  }
}

void TrainingManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

TrainingManifest TrainingManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open training digest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Online experiment

OnlineResult run_online_experiment(const ExperimentConfig& config, const PreparedData& data,
                                   const OnlineHooks& hooks) {
  config.validate();
  if (data.rounds.size() != config.rounds) {
    throw InvariantError("prepared data has " + std::to_string(data.rounds.size()) +
                         " rounds, config asks for " + std::to_string(config.rounds));
  }
  EngineConfig engine_config = config.engine;
  engine_config.seed = config.seed;

  OnlineResult result{{}, DetectionEngine(engine_config, data.schema), {}, data.initial};
  auto& engine = result.engine;
  auto& manifest = result.manifest;
  manifest.initial_source = config.initial_path.string();
  manifest.rounds_source = config.rounds_path.string();
  manifest.initial_lines = data.initial_lines;

  Stopwatch clock(config.timing);
  in_round(0, [&] { engine.train_initial(data.initial); });
  const double train_time = clock.lap();

  std::vector<Prediction> preds = in_round(0, [&] { return predict_all(engine, data.rounds[0]); });
  double predict_time = clock.lap();
  ValidationResult v = validate(preds, truths_of(data.rounds[0]));
  if (hooks.on_predictions) hooks.on_predictions(0, preds);

  std::uint64_t cumulative = data.initial.size();
  result.reports.push_back({0, v.accuracy_pct, train_time + predict_time, cumulative,
                            v.failed.size(), data.rounds[0].size(),
                            confusion_of(preds, data.rounds[0])});

  for (std::size_t r = 1; r <= config.rounds; ++r) {
    const auto& subset = data.rounds[r - 1];
    if (r > 1) {
      clock.lap();
      preds = in_round(r, [&] { return predict_all(engine, subset); });
      predict_time = clock.lap();
      v = validate(preds, truths_of(subset));
    }
    if (hooks.on_predictions) hooks.on_predictions(r, preds);
    std::vector<LabeledSample> failed;
    std::vector<std::size_t> failed_lines;
    failed.reserve(v.failed.size());
    for (const auto i : v.failed) {
      failed.push_back(subset[i]);
      failed_lines.push_back(data.round_lines[r - 1][i]);
    }
    if (hooks.on_update) hooks.on_update(r, v.failed);
    clock.lap();
    in_round(r, [&] { engine.update(failed); });
    const double update_time = clock.lap();

    cumulative += failed.size();
    result.training_multiset.insert(result.training_multiset.end(), failed.begin(), failed.end());
    manifest.failure_lines.push_back(std::move(failed_lines));
    result.reports.push_back({r, v.accuracy_pct, predict_time + update_time, cumulative,
                              v.failed.size(), subset.size(), confusion_of(preds, subset)});
  }
  manifest.sample_count = result.training_multiset.size();
  manifest.digest = multiset_digest(result.training_multiset);
  OnlineSummary summary;
  for (const auto& r : result.reports) summary.total_time_s += r.time_s;
  summary.final_accuracy_pct = result.reports.back().accuracy_pct;
  summary.final_failures = result.reports.back().failures;
  summary.final_evaluated = result.reports.back().evaluated;
  manifest.online = summary;
  return result;
}

OnlineResult run_online_experiment(const ExperimentConfig& config) {
  return run_online_experiment(config, prepare_data(config));
}

// ---------------------------------------------------------------------------
// Offline baseline

OfflineResult run_offline_baseline(const ExperimentConfig& config, const DatasetSchema& schema,
                                   std::span<const LabeledSample> training,
                                   std::span<const EvaluationSet> eval_sets) {
  EngineConfig engine_config = config.engine;
  engine_config.seed = config.seed;
  DetectionEngine engine(engine_config, schema);

  OfflineResult result;
  result.training_samples = training.size();
  result.digest = multiset_digest(training);
  Stopwatch clock(config.timing);
  engine.train_initial(training);
  result.train_time_s = clock.lap();

  for (const auto& set : eval_sets) {
    clock.lap();
    const auto preds = predict_all(engine, set.samples);
    const double t = clock.lap();
    const auto v = validate(preds, truths_of(set.samples));
    result.evaluations.push_back({set.name,
                                  {config.rounds, v.accuracy_pct, result.train_time_s + t,
                                   training.size(), v.failed.size(), set.samples.size(),
                                   confusion_of(preds, set.samples)}});
  }
  return result;
}

OfflineResult run_offline_baseline(const ExperimentConfig& config, const PreparedData& data,
                                   const TrainingManifest& manifest) {
  std::map<std::size_t, std::size_t> initial_by_line;
  for (std::size_t i = 0; i < data.initial_lines.size(); ++i) initial_by_line[data.initial_lines[i]] = i;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> round_by_line;
  for (std::size_t r = 0; r < data.rounds.size(); ++r) {
    for (std::size_t i = 0; i < data.round_lines[r].size(); ++i) {
      round_by_line[data.round_lines[r][i]] = {r, i};
    }
  }

  std::vector<LabeledSample> training;
  for (const auto line : manifest.initial_lines) {
    const auto it = initial_by_line.find(line);
    if (it == initial_by_line.end()) {
      throw DataError("training digest names initial line " + std::to_string(line) +
                      " which is not part of this experiment's initial set");
    }
    training.push_back(data.initial[it->second]);
  }
  for (const auto& lines : manifest.failure_lines) {
    for (const auto line : lines) {
      const auto it = round_by_line.find(line);
      if (it == round_by_line.end()) {
        throw DataError("training digest names round line " + std::to_string(line) +
                        " which is not part of this experiment's rounds");
      }
      training.push_back(data.rounds[it->second.first][it->second.second]);
    }
  }
  if (training.size() != manifest.sample_count || multiset_digest(training) != manifest.digest) {
    throw DataError("rebuilt training multiset does not match the digest (config or data changed?)");
  }

  std::vector<EvaluationSet> sets(2);
  sets[0].name = "all_rounds";
  for (const auto& r : data.rounds) sets[0].samples.insert(sets[0].samples.end(), r.begin(), r.end());
  sets[1].name = "final_round";
  sets[1].samples = data.rounds.back();
  auto result = run_offline_baseline(config, data.schema, training, sets);
  result.online = manifest.online;
  return result;
}

}  // namespace nsoinn
