#pragma once

// NSL-KDD ingestion: record parsing, schema fitting, feature encoding,
// attack-name mapping and round splitting.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nsoinn {

inline constexpr std::size_t kAttributeCount = 41;

// The 41 connection attributes in file order.
std::span<const std::string_view> attribute_names();

// protocol_type, service, flag.
std::vector<std::string> default_categorical_attributes();

enum class ClassLabel : std::uint8_t { Normal = 0, DoS, Probe, R2L, U2R };

inline constexpr std::size_t kClassLabelCount = 5;

inline constexpr std::array<ClassLabel, kClassLabelCount> kAllClassLabels = {
    ClassLabel::Normal, ClassLabel::DoS, ClassLabel::Probe, ClassLabel::R2L, ClassLabel::U2R};

// "normal", "dos", "probe", "r2l", "u2r".
std::string_view to_string(ClassLabel label) noexcept;

// Case-insensitive inverse of to_string.
std::optional<ClassLabel> parse_class_label(std::string_view name) noexcept;

struct RawRecord {
  std::vector<std::string> attributes;  // always kAttributeCount entries
  std::string label;
  std::optional<int> difficulty;
  std::size_t line = 0;  // 1-based line in the source file
};

using FeatureVector = std::vector<double>;

struct LabeledSample {
  FeatureVector x;
  ClassLabel y = ClassLabel::Normal;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// One record per non-empty line, in file order. Lines must carry 42 or 43
// comma-separated fields. Throws DataError naming the offending line.
std::vector<RawRecord> parse_nslkdd(const std::filesystem::path& path);
std::vector<RawRecord> parse_nslkdd(std::istream& in, std::string_view source_name);

enum class AttributeKind : std::uint8_t { Numeric, Categorical };

struct SchemaAttribute {
  std::string name;
  AttributeKind kind = AttributeKind::Numeric;
  double min = 0.0;  // numeric only
  double max = 0.0;
  std::vector<std::string> vocabulary;  // categorical only; sorted, unique
  std::size_t offset = 0;               // first encoded component

  // Encoded width: 1 for numeric, vocabulary + unknown slot for categorical.
  std::size_t width() const noexcept {
    return kind == AttributeKind::Numeric ? 1 : vocabulary.size() + 1;
  }

  friend bool operator==(const SchemaAttribute&, const SchemaAttribute&) = default;
};

// Encoding layout fitted on a training set. Attributes are laid out in file
// order; each categorical attribute occupies a one-hot block whose last slot
// is reserved for values never seen during fitting.
class DatasetSchema {
 public:
  DatasetSchema() = default;
  explicit DatasetSchema(std::vector<SchemaAttribute> attributes);

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<SchemaAttribute>& attributes() const noexcept { return attributes_; }
  const SchemaAttribute& attribute(std::string_view name) const;

  // Encodes the 41 attributes; throws DataError on a non-numeric token in a
  // numeric position.
  FeatureVector encode_features(const RawRecord& record) const;

  // Self-describing JSON text; see docs/FORMATS.md.
  std::string to_json() const;
  static DatasetSchema from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static DatasetSchema load(const std::filesystem::path& path);

  friend bool operator==(const DatasetSchema&, const DatasetSchema&) = default;

 private:
  std::vector<SchemaAttribute> attributes_;
  std::size_t dimension_ = 0;
};

DatasetSchema fit_schema(std::span<const RawRecord> records,
                         std::span<const std::string> categorical_attributes);
DatasetSchema fit_schema(std::span<const RawRecord> records);

// Maps fine-grained NSL-KDD attack names onto the coarse classes. Loaded from
// a tab-separated file of `attack_name<TAB>category` lines; blank lines and
// lines starting with '#' are ignored. "normal" always maps to Normal.
class AttackCategoryMap {
 public:
  AttackCategoryMap();

  static AttackCategoryMap load(const std::filesystem::path& path);
  static AttackCategoryMap parse(std::istream& in, std::string_view source_name);

  void insert(std::string attack_name, ClassLabel label);

  // Labels absent from the table map to `fallback` when set, otherwise
  // lookups throw DataError.
  void set_fallback(std::optional<ClassLabel> fallback) noexcept { fallback_ = fallback; }
  std::optional<ClassLabel> fallback() const noexcept { return fallback_; }

  std::optional<ClassLabel> find(std::string_view attack_name) const;
  ClassLabel map(std::string_view attack_name) const;

  const std::map<std::string, ClassLabel, std::less<>>& entries() const noexcept { return table_; }

 private:
  std::map<std::string, ClassLabel, std::less<>> table_;
  std::optional<ClassLabel> fallback_;
};

ClassLabel map_attack_category(std::string_view label, const AttackCategoryMap& mapping);

LabeledSample encode(const RawRecord& record, const DatasetSchema& schema,
                     const AttackCategoryMap& mapping);

std::vector<LabeledSample> encode_all(std::span<const RawRecord> records,
                                      const DatasetSchema& schema,
                                      const AttackCategoryMap& mapping);

// Checks the LabeledSample invariants against the schema layout. Returns a
// description of the first violation, or nullopt.
std::optional<std::string> check_sample_invariants(const LabeledSample& sample,
                                                   const DatasetSchema& schema);

// Index partition used by split_rounds: r contiguous parts (sizes differ by at
// most one, larger parts first), after a seeded shuffle when a seed is given.
std::vector<std::vector<std::size_t>> split_round_indices(std::size_t count, std::size_t rounds,
                                                          std::optional<std::uint64_t> seed = {});

template <class T>
std::vector<std::vector<T>> split_rounds(std::span<const T> items, std::size_t rounds,
                                         std::optional<std::uint64_t> seed = {}) {
  std::vector<std::vector<T>> parts;
  for (const auto& idx : split_round_indices(items.size(), rounds, seed)) {
    auto& part = parts.emplace_back();
    part.reserve(idx.size());
    for (const auto i : idx) part.push_back(items[i]);
  }
  return parts;
}

// Draws `size` indices preserving class proportions (largest-remainder
// quotas, every present class keeps at least one member when size allows).
// Returned indices are sorted in source order.
std::vector<std::size_t> stratified_subsample(std::span<const ClassLabel> labels, std::size_t size,
                                              std::uint64_t seed);

}  // namespace nsoinn
