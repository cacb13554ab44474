#include "nsoinn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nsoinn/error.hpp"
#include "random.hpp"

namespace nsoinn {
namespace {

constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
};

constexpr std::array<std::string_view, kClassLabelCount> kClassNames = {"normal", "dos", "probe",
                                                                       "r2l", "u2r"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> parse_number(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::size_t attribute_index(std::string_view name) {
  const auto it = std::find(kAttributeNames.begin(), kAttributeNames.end(), name);
  if (it == kAttributeNames.end()) {
    throw ConfigError("unknown NSL-KDD attribute '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - kAttributeNames.begin());
}

}  // namespace

std::span<const std::string_view> attribute_names() { return kAttributeNames; }

std::vector<std::string> default_categorical_attributes() {
  return {"protocol_type", "service", "flag"};
}

std::string_view to_string(ClassLabel label) noexcept {
  return kClassNames[static_cast<std::size_t>(label)];
}

std::optional<ClassLabel> parse_class_label(std::string_view name) noexcept {
  const auto key = lower(trim(name));
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (key == kClassNames[i]) return static_cast<ClassLabel>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

std::vector<RawRecord> parse_nslkdd(std::istream& in, std::string_view source_name) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;

    fields.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      fields.push_back(trim(text.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const auto where = std::string(source_name) + ":" + std::to_string(line_no);
    if (fields.size() != kAttributeCount + 1 && fields.size() != kAttributeCount + 2) {
      throw DataError(where + ": malformed line, expected 42 or 43 fields, found " +
                      std::to_string(fields.size()));
    }

    RawRecord rec;
    rec.line = line_no;
    rec.attributes.reserve(kAttributeCount);
    for (std::size_t i = 0; i < kAttributeCount; ++i) rec.attributes.emplace_back(fields[i]);
    rec.label = std::string(fields[kAttributeCount]);
    if (rec.label.empty()) throw DataError(where + ": empty label");
    if (fields.size() == kAttributeCount + 2) {
      int difficulty = 0;
      const auto tok = fields[kAttributeCount + 1];
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), difficulty);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError(where + ": difficulty field '" + std::string(tok) + "' is not an integer");
      }
      rec.difficulty = difficulty;
    }
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError(std::string(source_name) + ": read error");
  if (records.empty()) throw DataError(std::string(source_name) + ": no records");
  return records;
}

std::vector<RawRecord> parse_nslkdd(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return parse_nslkdd(in, path.string());
}

// ---------------------------------------------------------------------------
// Schema

DatasetSchema::DatasetSchema(std::vector<SchemaAttribute> attributes)
    : attributes_(std::move(attributes)) {
  if (attributes_.size() != kAttributeCount) {
    throw DataError("schema must describe " + std::to_string(kAttributeCount) +
                    " attributes, got " + std::to_string(attributes_.size()));
  }
  std::size_t offset = 0;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    auto& a = attributes_[i];
    if (a.name != kAttributeNames[i]) {
      throw DataError("schema attribute " + std::to_string(i) + " is '" + a.name +
                      "', expected '" + std::string(kAttributeNames[i]) + "'");
    }
    if (a.kind == AttributeKind::Numeric) {
      if (!std::isfinite(a.min) || !std::isfinite(a.max) || a.min > a.max) {
        throw DataError("schema attribute '" + a.name + "' has an invalid range");
      }
      a.vocabulary.clear();
    } else {
      if (!std::is_sorted(a.vocabulary.begin(), a.vocabulary.end()) ||
          std::adjacent_find(a.vocabulary.begin(), a.vocabulary.end()) != a.vocabulary.end()) {
        throw DataError("schema vocabulary of '" + a.name + "' must be sorted and unique");
      }
      a.min = a.max = 0.0;
    }
    a.offset = offset;
    offset += a.width();
  }
  dimension_ = offset;
}

const SchemaAttribute& DatasetSchema::attribute(std::string_view name) const {
  return attributes_.at(attribute_index(name));
}

FeatureVector DatasetSchema::encode_features(const RawRecord& record) const {
  if (record.attributes.size() != attributes_.size()) {
    throw DataError("record at line " + std::to_string(record.line) + " has " +
                    std::to_string(record.attributes.size()) + " attributes");
  }
  FeatureVector x(dimension_, 0.0);
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    const auto& a = attributes_[i];
    const std::string& token = record.attributes[i];
    if (a.kind == AttributeKind::Numeric) {
      const auto v = parse_number(token);
      if (!v) {
        throw DataError("line " + std::to_string(record.line) + ": attribute '" + a.name +
                        "' has non-numeric value '" + token + "'");
      }
      double scaled = 0.0;
      if (a.max > a.min) scaled = std::clamp((*v - a.min) / (a.max - a.min), 0.0, 1.0);
      x[a.offset] = scaled;
    } else {
      const auto it = std::lower_bound(a.vocabulary.begin(), a.vocabulary.end(), token);
      const std::size_t slot = (it != a.vocabulary.end() && *it == token)
                                   ? static_cast<std::size_t>(it - a.vocabulary.begin())
                                   : a.vocabulary.size();
      x[a.offset + slot] = 1.0;
    }
  }
  return x;
}

std::string DatasetSchema::to_json() const {
  using nlohmann::json;
  json attrs = json::array();
  for (const auto& a : attributes_) {
    json j{{"name", a.name}, {"offset", a.offset}};
    if (a.kind == AttributeKind::Numeric) {
      j["kind"] = "numeric";
      j["min"] = a.min;
      j["max"] = a.max;
    } else {
      j["kind"] = "categorical";
      j["vocabulary"] = a.vocabulary;
    }
    attrs.push_back(std::move(j));
  }
  const json doc{{"format", "nsoinn-schema"},
                 {"version", 1},
                 {"dimension", dimension_},
                 {"attributes", std::move(attrs)}};
  return doc.dump(2);
}

DatasetSchema DatasetSchema::from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "nsoinn-schema") {
      throw DataError("not a schema document");
    }
    if (doc.at("version").get<int>() != 1) {
      throw VersionMismatchError("schema", doc.at("version").get<std::uint32_t>(), 1);
    }
    std::vector<SchemaAttribute> attrs;
    for (const auto& j : doc.at("attributes")) {
      SchemaAttribute a;
      a.name = j.at("name").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "numeric") {
        a.kind = AttributeKind::Numeric;
        a.min = j.at("min").get<double>();
        a.max = j.at("max").get<double>();
      } else if (kind == "categorical") {
        a.kind = AttributeKind::Categorical;
        a.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
      } else {
        throw DataError("schema attribute '" + a.name + "' has unknown kind '" + kind + "'");
      }
      attrs.push_back(std::move(a));
    }
    DatasetSchema schema(std::move(attrs));
    if (schema.dimension() != doc.at("dimension").get<std::size_t>()) {
      throw DataError("schema dimension does not match its attribute layout");
    }
    return schema;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid schema JSON: ") + e.what());
  }
}

void DatasetSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

DatasetSchema fit_schema(std::span<const RawRecord> records,
                         std::span<const std::string> categorical_attributes) {
  if (records.empty()) throw DataError("cannot fit a schema on an empty record list");

  std::array<bool, kAttributeCount> is_categorical{};
  for (const auto& name : categorical_attributes) is_categorical[attribute_index(name)] = true;

  std::array<std::set<std::string, std::less<>>, kAttributeCount> vocab;
  std::array<double, kAttributeCount> lo;
  std::array<double, kAttributeCount> hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());

  for (const auto& rec : records) {
    if (rec.attributes.size() != kAttributeCount) {
      throw DataError("record at line " + std::to_string(rec.line) + " has " +
                      std::to_string(rec.attributes.size()) + " attributes");
    }
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      if (is_categorical[i]) {
        vocab[i].insert(rec.attributes[i]);
        continue;
      }
      const auto v = parse_number(rec.attributes[i]);
      if (!v) {
        throw DataError("line " + std::to_string(rec.line) + ": attribute '" +
                        std::string(kAttributeNames[i]) + "' has non-numeric value '" +
                        rec.attributes[i] + "'");
      }
      lo[i] = std::min(lo[i], *v);
      hi[i] = std::max(hi[i], *v);
    }
  }

  std::vector<SchemaAttribute> attrs(kAttributeCount);
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    auto& a = attrs[i];
    a.name = std::string(kAttributeNames[i]);
    if (is_categorical[i]) {
      a.kind = AttributeKind::Categorical;
      a.vocabulary.assign(vocab[i].begin(), vocab[i].end());
    } else {
      a.kind = AttributeKind::Numeric;
      a.min = lo[i];
      a.max = hi[i];
    }
  }
  return DatasetSchema(std::move(attrs));
}

DatasetSchema fit_schema(std::span<const RawRecord> records) {
  const auto names = default_categorical_attributes();
  return fit_schema(records, names);
}

// ---------------------------------------------------------------------------
// Attack categories

AttackCategoryMap::AttackCategoryMap() { table_.emplace("normal", ClassLabel::Normal); }

void AttackCategoryMap::insert(std::string attack_name, ClassLabel label) {
  table_.insert_or_assign(std::move(attack_name), label);
}

AttackCategoryMap AttackCategoryMap::parse(std::istream& in, std::string_view source_name) {
  AttackCategoryMap m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto where = std::string(source_name) + ":" + std::to_string(line_no);
    const auto tab = text.find('\t');
    if (tab == std::string_view::npos) {
      throw ConfigError(where + ": expected 'attack_name<TAB>category'");
    }
    const auto name = trim(text.substr(0, tab));
    const auto category = trim(text.substr(tab + 1));
    const auto label = parse_class_label(category);
    if (name.empty() || !label) {
      throw ConfigError(where + ": unknown category '" + std::string(category) + "'");
    }
    m.insert(std::string(name), *label);
  }
  return m;
}

AttackCategoryMap AttackCategoryMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attack-category mapping " + path.string());
  return parse(in, path.string());
}

std::optional<ClassLabel> AttackCategoryMap::find(std::string_view attack_name) const {
  const auto it = table_.find(attack_name);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

ClassLabel AttackCategoryMap::map(std::string_view attack_name) const {
  if (const auto hit = find(attack_name)) return *hit;
  if (fallback_) return *fallback_;
  throw DataError("unmapped attack label '" + std::string(attack_name) + "'");
}

ClassLabel map_attack_category(std::string_view label, const AttackCategoryMap& mapping) {
  return mapping.map(label);
}

// ---------------------------------------------------------------------------
// Encoding

LabeledSample encode(const RawRecord& record, const DatasetSchema& schema,
                     const AttackCategoryMap& mapping) {
  return {schema.encode_features(record), mapping.map(record.label)};
}

std::vector<LabeledSample> encode_all(std::span<const RawRecord> records,
                                      const DatasetSchema& schema,
                                      const AttackCategoryMap& mapping) {
  std::vector<LabeledSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode(r, schema, mapping));
  return out;
}

std::optional<std::string> check_sample_invariants(const LabeledSample& sample,
                                                   const DatasetSchema& schema) {
  if (sample.x.size() != schema.dimension()) {
    return "dimension " + std::to_string(sample.x.size()) + " != schema dimension " +
           std::to_string(schema.dimension());
  }
  if (static_cast<std::size_t>(sample.y) >= kClassLabelCount) return std::string("invalid label");
  for (const auto& a : schema.attributes()) {
    if (a.kind == AttributeKind::Numeric) {
      const double v = sample.x[a.offset];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        return "numeric component '" + a.name + "' out of [0,1]: " + std::to_string(v);
      }
      continue;
    }
    std::size_t ones = 0;
    for (std::size_t k = 0; k < a.width(); ++k) {
      const double v = sample.x[a.offset + k];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return "one-hot block '" + a.name + "' has non-binary component";
      }
    }
    if (ones != 1) return "one-hot block '" + a.name + "' has " + std::to_string(ones) + " ones";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<std::vector<std::size_t>> split_round_indices(std::size_t count, std::size_t rounds,
                                                          std::optional<std::uint64_t> seed) {
  if (rounds == 0) throw ConfigError("round count must be at least 1");
  if (count == 0) throw DataError("cannot split an empty record list");
  if (rounds > count) {
    throw ConfigError("round count " + std::to_string(rounds) + " exceeds record count " +
                      std::to_string(count));
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    detail::Rng rng(*seed);
    detail::shuffle(order, rng);
  }
  std::vector<std::vector<std::size_t>> parts(rounds);
  const std::size_t base = count / rounds;
  const std::size_t extra = count % rounds;
  std::size_t pos = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t n = base + (r < extra ? 1 : 0);
    parts[r].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  }
  return parts;
}

std::vector<std::size_t> stratified_subsample(std::span<const ClassLabel> labels, std::size_t size,
                                              std::uint64_t seed) {
  const std::size_t total = labels.size();
  if (size > total) {
    throw ConfigError("subsample size " + std::to_string(size) + " exceeds population " +
                      std::to_string(total));
  }
  std::array<std::vector<std::size_t>, kClassLabelCount> members;
  for (std::size_t i = 0; i < total; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);

  std::array<std::size_t, kClassLabelCount> quota{};
  std::array<double, kClassLabelCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < kClassLabelCount; ++k) {
    const double exact =
        static_cast<double>(size) * static_cast<double>(members[k].size()) / static_cast<double>(total);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(quota[k]);
    assigned += quota[k];
  }
  std::array<std::size_t, kClassLabelCount> by_remainder{};
  std::iota(by_remainder.begin(), by_remainder.end(), std::size_t{0});
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < size; i = (i + 1) % kClassLabelCount) {
    const auto k = by_remainder[i];
    if (quota[k] < members[k].size()) {
      ++quota[k];
      ++assigned;
    }
  }

  const auto present = static_cast<std::size_t>(
      std::count_if(members.begin(), members.end(), [](const auto& m) { return !m.empty(); }));
  if (size >= present) {
    for (std::size_t k = 0; k < kClassLabelCount; ++k) {
      if (members[k].empty() || quota[k] > 0) continue;
      const auto donor = static_cast<std::size_t>(
          std::max_element(quota.begin(), quota.end()) - quota.begin());
      --quota[donor];
      ++quota[k];
    }
  }

  std::vector<std::size_t> picked;
  picked.reserve(size);
  for (std::size_t k = 0; k < kClassLabelCount; ++k) {
    auto pool = members[k];
    detail::Rng rng(detail::mix_seed(seed, k));
    for (std::size_t i = 0; i < quota[k]; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace nsoinn
