#pragma once

// Seeded generator for NSL-KDD-format files. Used when the real KDDTrain+ /
// KDDTest+ files are not available: it reproduces their record counts, the
// per-attack composition of each file and a train/test distribution shift
// (attack types and traffic modes present in only one of the two files).
// The feature values are synthetic; accuracies measured on them say nothing
// about the real benchmark.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsoinn/dataset.hpp"

namespace nsoinn {

enum class SyntheticSplit : std::uint8_t { Train, Test };  // KDDTrain+ / KDDTest+ analogs

struct AttackCount {
  std::string_view name;
  std::size_t count;
};

// Published per-label record counts of the two files (125973 / 22544 rows).
std::span<const AttackCount> nslkdd_composition(SyntheticSplit split);

struct SyntheticOptions {
  std::uint64_t seed = 1;
  // Multiplies every label count (rounded, at least 1 per label). 1.0 gives
  // the full-size file.
  double scale = 1.0;
};

// Records in shuffled order; `line` is the 1-based position in that order.
std::vector<RawRecord> generate_nslkdd(SyntheticSplit split, const SyntheticOptions& options);

// One comma-separated line (41 attributes, label, difficulty), no newline.
std::string format_nslkdd_record(const RawRecord& record);

void write_nslkdd(std::span<const RawRecord> records, std::ostream& out);
void write_nslkdd(std::span<const RawRecord> records, const std::filesystem::path& path);

}  // namespace nsoinn
