#pragma once

// Soft-margin kernel SVM trained by sequential minimal optimization.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace nsoinn {

class ByteReader;
class ByteWriter;

struct Kernel {
  enum class Type : std::uint8_t { Linear, Rbf };

  Type type = Type::Rbf;
  double gamma = 1.0;  // Rbf only

  static Kernel linear() noexcept { return {Type::Linear, 0.0}; }
  static Kernel rbf(double gamma) noexcept { return {Type::Rbf, gamma}; }

  double operator()(std::span<const double> a, std::span<const double> b) const;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct SvmParams {
  double c = 1.0;
  Kernel kernel = Kernel::rbf(1.0);
  double kkt_tolerance = 1e-3;
  std::uint32_t max_passes = 10;        // consecutive sweeps without a change
  std::uint64_t max_iterations = 1'000'000;  // pair-update attempts
  std::uint64_t seed = 0;               // second-index randomization

  void validate() const;

  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct SmoSolution {
  std::vector<double> alphas;  // one per training sample, in [0, C]
  double bias = 0.0;
  std::uint64_t iterations = 0;
  bool converged = false;
};

class BinarySvmModel {
 public:
  BinarySvmModel() = default;

  // `coefficients[i]` is alpha_i * y_i of support vector i.
  BinarySvmModel(SvmParams params, std::vector<std::vector<double>> support_vectors,
                 std::vector<double> coefficients, double bias, std::uint64_t iterations = 0,
                 bool converged = true);

  // f(x) = sum_i coef_i K(sv_i, x) + b.
  double decision_value(std::span<const double> x) const;

  // +1 when f(x) >= 0, otherwise -1.
  int predict(std::span<const double> x) const { return decision_value(x) >= 0.0 ? 1 : -1; }

  const SvmParams& params() const noexcept { return params_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t support_vector_count() const noexcept { return support_vectors_.size(); }
  const std::vector<std::vector<double>>& support_vectors() const noexcept { return support_vectors_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  double bias() const noexcept { return bias_; }
  std::uint64_t iterations() const noexcept { return iterations_; }
  bool converged() const noexcept { return converged_; }

  void write(ByteWriter& out) const;
  static BinarySvmModel read(ByteReader& in);

  friend bool operator==(const BinarySvmModel&, const BinarySvmModel&) = default;

 private:
  SvmParams params_;
  std::size_t dimension_ = 0;
  std::vector<std::vector<double>> support_vectors_;
  std::vector<double> coefficients_;
  double bias_ = 0.0;
  std::uint64_t iterations_ = 0;
  bool converged_ = true;
};

// Solves the dual. Labels must be +1 or -1 with both signs present.
// Throws DataError on single-class input, dimension mismatch or a
// non-finite feature.
SmoSolution smo_solve(std::span<const std::vector<double>> points, std::span<const int> labels,
                      const SvmParams& params);

// smo_solve followed by dropping the samples with alpha == 0.
BinarySvmModel smo_train(std::span<const std::vector<double>> points, std::span<const int> labels,
                         const SvmParams& params);

// W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j). Throws DataError
// when an alpha lies outside [0, C].
double dual_objective(std::span<const std::vector<double>> points, std::span<const int> labels,
                      std::span<const double> alphas, const SvmParams& params);

// Pairwise (one-versus-one) models keyed by class index pairs (i < j). The
// model for (i, j) scores class i as +1 and class j as -1.
class PairwiseSvmTable {
 public:
  void insert(std::size_t i, std::size_t j, BinarySvmModel model);
  const BinarySvmModel* find(std::size_t i, std::size_t j) const;
  std::size_t size() const noexcept { return models_.size(); }
  bool empty() const noexcept { return models_.empty(); }
  void clear() noexcept { models_.clear(); }
  const std::map<std::pair<std::size_t, std::size_t>, BinarySvmModel>& models() const noexcept {
    return models_;
  }

  friend bool operator==(const PairwiseSvmTable&, const PairwiseSvmTable&) = default;

 private:
  std::map<std::pair<std::size_t, std::size_t>, BinarySvmModel> models_;
};

struct VoteResult {
  std::size_t winner = 0;           // a class index from the candidate list
  std::vector<std::size_t> tally;   // aligned with the candidate list
};

// Max-wins voting among `candidates`. Each pairwise model votes once; ties
// go to the higher caller-supplied score (aligned with candidates), then to
// the smaller class index. Throws InvariantError when a pair is missing.
VoteResult pairwise_vote(const PairwiseSvmTable& models, std::span<const std::size_t> candidates,
                         std::span<const double> x, std::span<const double> candidate_scores);

}  // namespace nsoinn
