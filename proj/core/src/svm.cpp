#include "nsoinn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsoinn/binary_io.hpp"
#include "nsoinn/error.hpp"
#include "random.hpp"

namespace nsoinn {
namespace {

// Full Gram matrix up to this many samples; rows are recomputed beyond it.
constexpr std::size_t kGramCacheLimit = 3000;

class Gram {
 public:
  Gram(std::span<const std::vector<double>> points, const Kernel& kernel)
      : points_(points), kernel_(kernel), n_(points.size()), diag_(n_) {
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_(points_[i], points_[i]);
    if (n_ <= kGramCacheLimit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        full_[i * n_ + i] = diag_[i];
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double v = kernel_(points_[i], points_[j]);
          full_[i * n_ + j] = v;
          full_[j * n_ + i] = v;
        }
      }
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (!full_.empty()) return full_[i * n_ + j];
    return i == j ? diag_[i] : kernel_(points_[i], points_[j]);
  }

  // Row i as a span; computed into `scratch` when the matrix is not cached.
  std::span<const double> row(std::size_t i, std::vector<double>& scratch) const {
    if (!full_.empty()) return {full_.data() + i * n_, n_};
    scratch.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) scratch[j] = (*this)(i, j);
    return scratch;
  }

 private:
  std::span<const std::vector<double>> points_;
  Kernel kernel_;
  std::size_t n_;
  std::vector<double> diag_;
  std::vector<double> full_;
};

void check_training_set(std::span<const std::vector<double>> points, std::span<const int> labels) {
  if (points.size() != labels.size()) {
    throw DataError("SVM training: " + std::to_string(points.size()) + " points but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (points.empty()) throw DataError("SVM training set is empty");
  bool pos = false;
  bool neg = false;
  const std::size_t d = points.front().size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] == 1) {
      pos = true;
    } else if (labels[i] == -1) {
      neg = true;
    } else {
      throw DataError("SVM labels must be +1 or -1");
    }
    if (points[i].size() != d) throw DataError("SVM training: dimension mismatch");
    for (const double v : points[i]) {
      if (!std::isfinite(v)) throw DataError("SVM training: non-finite feature");
    }
  }
  if (!pos || !neg) throw DataError("SVM training needs samples of both classes");
}

}  // namespace

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (type == Type::Linear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::exp(-gamma * sq);
}

void SvmParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("SVM C must be positive");
  if (kernel.type == Kernel::Type::Rbf && (!(kernel.gamma > 0.0) || !std::isfinite(kernel.gamma))) {
    throw ConfigError("RBF gamma must be positive");
  }
  if (!(kkt_tolerance > 0.0)) throw ConfigError("SVM kkt_tolerance must be positive");
  if (max_passes < 1) throw ConfigError("SVM max_passes must be >= 1");
  if (max_iterations < 1) throw ConfigError("SVM max_iterations must be >= 1");
}

// ---------------------------------------------------------------------------
// SMO

SmoSolution smo_solve(std::span<const std::vector<double>> points, std::span<const int> labels,
                      const SvmParams& params) {
  params.validate();
  check_training_set(points, labels);

  const std::size_t n = points.size();
  const double c = params.c;
  const double tol = params.kkt_tolerance;
  const double snap = 1e-12 * c;
  const Gram gram(points, params.kernel);

  SmoSolution sol;
  auto& alpha = sol.alphas;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, 0.0);  // sum_j alpha_j y_j K(j, i)
  double b = 0.0;
  std::vector<double> row_i;
  std::vector<double> row_j;

  auto error = [&](std::size_t k) { return grad[k] + b - labels[k]; };

  auto take_step = [&](std::size_t i, std::size_t j) {
    if (i == j) return false;
    const double yi = labels[i];
    const double yj = labels[j];
    const double ai = alpha[i];
    const double aj = alpha[j];
    const double ei = error(i);
    const double ej = error(j);
    double lo;
    double hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(c, c + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - c);
      hi = std::min(c, ai + aj);
    }
    if (hi - lo <= snap) return false;
    const double kii = gram(i, i);
    const double kjj = gram(j, j);
    const double kij = gram(i, j);
    const double eta = 2.0 * kij - kii - kjj;
    if (eta >= 0.0) return false;

    double aj_new = std::clamp(aj - yj * (ei - ej) / eta, lo, hi);
    if (aj_new < snap) aj_new = 0.0;
    if (aj_new > c - snap) aj_new = c;
    if (std::abs(aj_new - aj) <= snap) return false;
    double ai_new = ai + yi * yj * (aj - aj_new);
    if (ai_new < snap) ai_new = 0.0;
    if (ai_new > c - snap) ai_new = c;

    const double dai = ai_new - ai;
    const double daj = aj_new - aj;
    const double b1 = b - ei - yi * dai * kii - yj * daj * kij;
    const double b2 = b - ej - yi * dai * kij - yj * daj * kjj;
    if (ai_new > 0.0 && ai_new < c) {
      b = b1;
    } else if (aj_new > 0.0 && aj_new < c) {
      b = b2;
    } else {
      b = 0.5 * (b1 + b2);
    }
    alpha[i] = ai_new;
    alpha[j] = aj_new;
    const auto ki = gram.row(i, row_i);
    const auto kj = gram.row(j, row_j);
    for (std::size_t k = 0; k < n; ++k) grad[k] += yi * dai * ki[k] + yj * daj * kj[k];
    return true;
  };

  detail::Rng rng(params.seed);
  std::uint32_t passes = 0;
  std::uint64_t iterations = 0;
  while (passes < params.max_passes && iterations < params.max_iterations) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n && iterations < params.max_iterations; ++i) {
      const double ri = labels[i] * error(i);
      if (!((ri < -tol && alpha[i] < c) || (ri > tol && alpha[i] > 0.0))) continue;

      // Second index: largest |E_i - E_j| first, a seeded random pick otherwise.
      const double ei = error(i);
      std::size_t best = i;
      double best_gap = -1.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double gap = std::abs(ei - error(k));
        if (k != i && gap > best_gap) {
          best_gap = gap;
          best = k;
        }
      }
      ++iterations;
      if (take_step(i, best)) {
        ++changed;
        continue;
      }
      if (n > 2 && iterations < params.max_iterations) {
        auto j = static_cast<std::size_t>(rng.below(n - 1));
        if (j >= i) ++j;
        ++iterations;
        if (take_step(i, j)) ++changed;
      }
    }
    passes = changed == 0 ? passes + 1 : 0;
  }
  sol.iterations = iterations;
  sol.converged = passes >= params.max_passes;

  // Bias: mean over free support vectors, else the midpoint of the interval
  // the bound multipliers allow.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double yk = labels[k];
    const double target = yk - grad[k];
    if (alpha[k] > 0.0 && alpha[k] < c) {
      free_sum += target;
      ++free_count;
    } else if ((alpha[k] == 0.0) == (yk > 0)) {
      lower = std::max(lower, target);
    } else {
      upper = std::min(upper, target);
    }
  }
  if (free_count > 0) {
    sol.bias = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(lower) && std::isfinite(upper)) {
    sol.bias = 0.5 * (lower + upper);
  } else {
    sol.bias = std::isfinite(lower) ? lower : upper;
  }
  return sol;
}

BinarySvmModel smo_train(std::span<const std::vector<double>> points, std::span<const int> labels,
                         const SvmParams& params) {
  const auto sol = smo_solve(points, labels, params);
  std::vector<std::vector<double>> svs;
  std::vector<double> coefs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (sol.alphas[i] > 0.0) {
      svs.push_back(points[i]);
      coefs.push_back(sol.alphas[i] * labels[i]);
    }
  }
  return BinarySvmModel(params, std::move(svs), std::move(coefs), sol.bias, sol.iterations,
                        sol.converged);
}

double dual_objective(std::span<const std::vector<double>> points, std::span<const int> labels,
                      std::span<const double> alphas, const SvmParams& params) {
  if (alphas.size() != points.size() || labels.size() != points.size()) {
    throw DataError("dual_objective: size mismatch");
  }
  for (const double a : alphas) {
    if (!(a >= 0.0 && a <= params.c)) throw DataError("dual_objective: alpha outside [0, C]");
  }
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    linear += alphas[i];
    if (alphas[i] == 0.0) continue;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (alphas[j] == 0.0) continue;
      quad += alphas[i] * alphas[j] * labels[i] * labels[j] * params.kernel(points[i], points[j]);
    }
  }
  return linear - 0.5 * quad;
}

// ---------------------------------------------------------------------------
// Model

BinarySvmModel::BinarySvmModel(SvmParams params, std::vector<std::vector<double>> support_vectors,
                               std::vector<double> coefficients, double bias,
                               std::uint64_t iterations, bool converged)
    : params_(params),
      support_vectors_(std::move(support_vectors)),
      coefficients_(std::move(coefficients)),
      bias_(bias),
      iterations_(iterations),
      converged_(converged) {
  if (support_vectors_.size() != coefficients_.size()) {
    throw InvariantError("support vector / coefficient count mismatch");
  }
  dimension_ = support_vectors_.empty() ? 0 : support_vectors_.front().size();
  for (const auto& sv : support_vectors_) {
    if (sv.size() != dimension_) throw InvariantError("support vectors differ in dimension");
  }
}

double BinarySvmModel::decision_value(std::span<const double> x) const {
  if (!support_vectors_.empty() && x.size() != dimension_) {
    throw DataError("SVM query dimension " + std::to_string(x.size()) + " != " +
                    std::to_string(dimension_));
  }
  double f = bias_;
  for (std::size_t i = 0; i < support_vectors_.size(); ++i) {
    f += coefficients_[i] * params_.kernel(support_vectors_[i], x);
  }
  return f;
}

void BinarySvmModel::write(ByteWriter& out) const {
  out.f64(params_.c);
  out.u8(static_cast<std::uint8_t>(params_.kernel.type));
  out.f64(params_.kernel.gamma);
  out.f64(params_.kkt_tolerance);
  out.u32(params_.max_passes);
  out.u64(params_.max_iterations);
  out.u64(params_.seed);
  out.u64(dimension_);
  out.u64(support_vectors_.size());
  for (const auto& sv : support_vectors_) out.f64s(sv);
  out.f64s(coefficients_);
  out.f64(bias_);
  out.u64(iterations_);
  out.u8(converged_ ? 1 : 0);
}

BinarySvmModel BinarySvmModel::read(ByteReader& in) {
  SvmParams p;
  p.c = in.f64();
  const auto kernel_type = in.u8();
  if (kernel_type > 1) throw CorruptionError("SVM snapshot has an unknown kernel type");
  p.kernel.type = static_cast<Kernel::Type>(kernel_type);
  p.kernel.gamma = in.f64();
  p.kkt_tolerance = in.f64();
  p.max_passes = in.u32();
  p.max_iterations = in.u64();
  p.seed = in.u64();
  const auto dimension = in.u64();
  const auto count = in.u64();
  if (dimension > 0 && count > in.remaining() / (8 * dimension)) {
    throw CorruptionError("SVM snapshot support-vector count exceeds payload");
  }
  std::vector<std::vector<double>> svs(count);
  for (auto& sv : svs) sv = in.f64s(dimension);
  auto coefs = in.f64s(count);
  const double bias = in.f64();
  const auto iterations = in.u64();
  const bool converged = in.u8() != 0;
  try {
    BinarySvmModel m(p, std::move(svs), std::move(coefs), bias, iterations, converged);
    m.dimension_ = dimension;
    return m;
  } catch (const InvariantError& e) {
    throw CorruptionError(std::string("SVM snapshot: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pairwise voting

void PairwiseSvmTable::insert(std::size_t i, std::size_t j, BinarySvmModel model) {
  if (i >= j) throw InvariantError("pairwise SVM key must satisfy i < j");
  models_.insert_or_assign({i, j}, std::move(model));
}

const BinarySvmModel* PairwiseSvmTable::find(std::size_t i, std::size_t j) const {
  const auto it = models_.find({i, j});
  return it == models_.end() ? nullptr : &it->second;
}

VoteResult pairwise_vote(const PairwiseSvmTable& models, std::span<const std::size_t> candidates,
                         std::span<const double> x, std::span<const double> candidate_scores) {
  if (candidates.empty()) throw InvariantError("pairwise_vote needs at least one candidate");
  if (candidate_scores.size() != candidates.size()) {
    throw InvariantError("pairwise_vote: one score per candidate required");
  }
  VoteResult result;
  result.tally.assign(candidates.size(), 0);
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    for (std::size_t b = a + 1; b < candidates.size(); ++b) {
      const bool ordered = candidates[a] < candidates[b];
      const auto lo = ordered ? candidates[a] : candidates[b];
      const auto hi = ordered ? candidates[b] : candidates[a];
      const auto* model = models.find(lo, hi);
      if (model == nullptr) {
        throw InvariantError("missing pairwise SVM for classes " + std::to_string(lo) + " and " +
                             std::to_string(hi));
      }
      const bool lo_wins = model->decision_value(x) >= 0.0;
      ++result.tally[lo_wins == ordered ? a : b];
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const auto better = [&] {
      if (result.tally[k] != result.tally[best]) return result.tally[k] > result.tally[best];
      if (candidate_scores[k] != candidate_scores[best]) {
        return candidate_scores[k] > candidate_scores[best];
      }
      return candidates[k] < candidates[best];
    }();
    if (better) best = k;
  }
  result.winner = candidates[best];
  return result;
}

}  // namespace nsoinn
