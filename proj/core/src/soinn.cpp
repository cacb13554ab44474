#include "nsoinn/soinn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsoinn/binary_io.hpp"
#include "nsoinn/error.hpp"

namespace nsoinn {
namespace {

constexpr Magic kSoinnMagic = {'N', 'S', 'O', 'I', 'N', 'N', 'S', 'N'};
constexpr std::uint32_t kSoinnVersion = 1;

}  // namespace

void SoinnParams::validate() const {
  if (age_max < 1) throw ConfigError("SOINN age_max must be >= 1");
  if (lambda < 1) throw ConfigError("SOINN lambda must be >= 1");
  if (!(neighbor_rate_divisor > 0.0) || !std::isfinite(neighbor_rate_divisor)) {
    throw ConfigError("SOINN neighbor_rate_divisor must be a positive finite number");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvariantError("squared_distance: dimension mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

SoinnNetwork::SoinnNetwork(std::size_t dimension, SoinnParams params)
    : dimension_(dimension), params_(params) {
  if (dimension_ == 0) throw ConfigError("SOINN dimension must be positive");
  params_.validate();
}

std::size_t SoinnNetwork::index_of(NodeId id) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const SoinnNode& n, NodeId v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) {
    throw InvariantError("unknown SOINN node id " + std::to_string(id));
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool SoinnNetwork::contains(NodeId id) const noexcept {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const SoinnNode& n, NodeId v) { return n.id < v; });
  return it != nodes_.end() && it->id == id;
}

const SoinnNode& SoinnNetwork::node(NodeId id) const { return nodes_[index_of(id)]; }

std::vector<SoinnEdge> SoinnNetwork::edges() const {
  std::vector<SoinnEdge> out;
  out.reserve(edges_.size());
  for (const auto& [k, age] : edges_) out.push_back({k.first, k.second, age});
  return out;
}

std::vector<NodeId> SoinnNetwork::neighbors(NodeId id) const { return adjacency_[index_of(id)]; }

void SoinnNetwork::check_input(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw InvariantError("SOINN input dimension " + std::to_string(x.size()) + " != " +
                         std::to_string(dimension_));
  }
  for (const double v : x) {
    if (!std::isfinite(v)) throw InvariantError("SOINN input has a non-finite component");
  }
}

NodeId SoinnNetwork::create_node(std::span<const double> x) {
  const NodeId id = next_id_++;
  nodes_.push_back({id, std::vector<double>(x.begin(), x.end()), 0});
  adjacency_.emplace_back();
  return id;
}

NodeId SoinnNetwork::add_node(std::vector<double> weight, std::uint64_t wins) {
  check_input(weight);
  const NodeId id = create_node(weight);
  nodes_.back().wins = wins;
  return id;
}

void SoinnNetwork::set_edge(NodeId a, NodeId b, std::uint32_t age) {
  if (a == b) throw InvariantError("SOINN self-edges are not allowed");
  if (age > params_.age_max) throw InvariantError("SOINN edge age exceeds age_max");
  const auto ia = index_of(a);
  const auto ib = index_of(b);
  const auto [it, inserted] = edges_.insert_or_assign(key(a, b), age);
  if (inserted) {
    auto& na = adjacency_[ia];
    na.insert(std::upper_bound(na.begin(), na.end(), b), b);
    auto& nb = adjacency_[ib];
    nb.insert(std::upper_bound(nb.begin(), nb.end(), a), a);
  }
}

void SoinnNetwork::erase_edge(NodeId a, NodeId b) {
  edges_.erase(key(a, b));
  auto& na = adjacency_[index_of(a)];
  na.erase(std::lower_bound(na.begin(), na.end(), b));
  auto& nb = adjacency_[index_of(b)];
  nb.erase(std::lower_bound(nb.begin(), nb.end(), a));
}

Winners SoinnNetwork::find_winners(std::span<const double> x) const {
  if (nodes_.size() < 2) throw InvariantError("find_winners needs at least two nodes");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Winners w{0, 0, inf, inf};
  // Strict comparisons over id-ordered nodes give ties to the smaller id.
  for (const auto& n : nodes_) {
    const double d = squared_distance(x, n.weight);
    if (d < w.first_distance) {
      w.second = w.first;
      w.second_distance = w.first_distance;
      w.first = n.id;
      w.first_distance = d;
    } else if (d < w.second_distance) {
      w.second = n.id;
      w.second_distance = d;
    }
  }
  return w;
}

double SoinnNetwork::similarity_threshold(NodeId id) const {
  const auto i = index_of(id);
  if (nodes_.size() < 2) throw InvariantError("similarity_threshold needs at least two nodes");
  const auto& w = nodes_[i].weight;
  if (!adjacency_[i].empty()) {
    double t = 0.0;
    for (const NodeId j : adjacency_[i]) t = std::max(t, squared_distance(w, node(j).weight));
    return t;
  }
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (j != i) t = std::min(t, squared_distance(w, nodes_[j].weight));
  }
  return t;
}

SoinnEvent SoinnNetwork::process_input(std::span<const double> x) {
  check_input(x);
  ++inputs_seen_;

  if (nodes_.size() < 2) return {SoinnEvent::Kind::NodeCreated, create_node(x)};

  const Winners w = find_winners(x);
  if (w.first_distance > similarity_threshold(w.first) ||
      w.second_distance > similarity_threshold(w.second)) {
    return {SoinnEvent::Kind::NodeCreated, create_node(x)};
  }

  NodeId u = w.first;
  if (params_.win_cap > 0) {
    if (node(w.first).wins <= params_.win_cap) {
      u = w.first;
    } else if (node(w.second).wins <= params_.win_cap) {
      u = w.second;
    } else {
      return {SoinnEvent::Kind::NodeCreated, create_node(x)};
    }
  }

  set_edge(w.first, w.second, 0);
  const auto pair_key = key(w.first, w.second);
  std::vector<NodeId> expired;
  for (const NodeId j : adjacency_[index_of(u)]) {
    const auto k = key(u, j);
    if (k == pair_key) continue;
    if (++edges_[k] > params_.age_max) expired.push_back(j);
  }
  for (const NodeId j : expired) erase_edge(u, j);

  const auto ui = index_of(u);
  auto& winner = nodes_[ui];
  ++winner.wins;
  const double m = static_cast<double>(winner.wins);
  const double rate = 1.0 / m;
  for (std::size_t k = 0; k < dimension_; ++k) winner.weight[k] += rate * (x[k] - winner.weight[k]);
  const double neighbor_rate = 1.0 / (params_.neighbor_rate_divisor * m);
  for (const NodeId j : adjacency_[ui]) {
    auto& nw = nodes_[index_of(j)].weight;
    for (std::size_t k = 0; k < dimension_; ++k) nw[k] += neighbor_rate * (x[k] - nw[k]);
  }

  if (inputs_seen_ % params_.lambda == 0) cleanup();
  return {SoinnEvent::Kind::WinnerUpdated, u};
}

std::size_t SoinnNetwork::cleanup() {
  std::vector<EdgeKey> expired;
  for (const auto& [k, age] : edges_) {
    if (age > params_.age_max) expired.push_back(k);
  }
  for (const auto& k : expired) erase_edge(k.first, k.second);

  std::vector<bool> keep(nodes_.size());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    keep[i] = !adjacency_[i].empty();
    kept += keep[i] ? 1 : 0;
  }
  if (kept == 0) {
    if (nodes_.size() <= 2) return 0;
    std::vector<std::size_t> order(nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return nodes_[a].wins > nodes_[b].wins; });
    keep[order[0]] = keep[order[1]] = true;
    kept = 2;
  }
  const std::size_t removed = nodes_.size() - kept;
  if (removed == 0) return 0;

  std::vector<SoinnNode> nodes;
  std::vector<std::vector<NodeId>> adjacency;
  nodes.reserve(kept);
  adjacency.reserve(kept);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!keep[i]) continue;
    nodes.push_back(std::move(nodes_[i]));
    adjacency.push_back(std::move(adjacency_[i]));
  }
  nodes_ = std::move(nodes);
  adjacency_ = std::move(adjacency);
  return removed;
}

std::vector<std::vector<double>> SoinnNetwork::export_nodes() const {
  std::vector<std::vector<double>> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.weight);
  return out;
}

std::size_t SoinnNetwork::connected_components() const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t start = 0; start < nodes_.size(); ++start) {
    if (seen[start]) continue;
    ++components;
    seen[start] = true;
    stack.push_back(start);
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (const NodeId j : adjacency_[i]) {
        const auto ji = index_of(j);
        if (!seen[ji]) {
          seen[ji] = true;
          stack.push_back(ji);
        }
      }
    }
  }
  return components;
}

// ---------------------------------------------------------------------------
// Serialization

void SoinnNetwork::write(ByteWriter& out) const {
  out.u64(dimension_);
  out.u32(params_.win_cap);
  out.u32(params_.age_max);
  out.u32(params_.lambda);
  out.f64(params_.neighbor_rate_divisor);
  out.u64(inputs_seen_);
  out.u64(next_id_);
  out.u64(nodes_.size());
  for (const auto& n : nodes_) {
    out.u64(n.id);
    out.u64(n.wins);
    out.f64s(n.weight);
  }
  out.u64(edges_.size());
  for (const auto& [k, age] : edges_) {
    out.u64(k.first);
    out.u64(k.second);
    out.u32(age);
  }
}

SoinnNetwork SoinnNetwork::read(ByteReader& in) {
  const auto dimension = in.u64();
  SoinnParams params;
  params.win_cap = in.u32();
  params.age_max = in.u32();
  params.lambda = in.u32();
  params.neighbor_rate_divisor = in.f64();
  SoinnNetwork net = [&] {
    try {
      return SoinnNetwork(dimension, params);
    } catch (const ConfigError& e) {
      throw CorruptionError(std::string("SOINN snapshot has invalid parameters: ") + e.what());
    }
  }();
  net.inputs_seen_ = in.u64();
  net.next_id_ = in.u64();
  const auto node_count = in.u64();
  if (node_count > in.remaining() / (16 + 8 * dimension)) {
    throw CorruptionError("SOINN snapshot node count exceeds payload");
  }
  for (std::uint64_t i = 0; i < node_count; ++i) {
    SoinnNode n;
    n.id = in.u64();
    n.wins = in.u64();
    n.weight = in.f64s(dimension);
    if (n.id >= net.next_id_ || (!net.nodes_.empty() && n.id <= net.nodes_.back().id)) {
      throw CorruptionError("SOINN snapshot node ids are not increasing");
    }
    for (const double v : n.weight) {
      if (!std::isfinite(v)) throw CorruptionError("SOINN snapshot has a non-finite weight");
    }
    net.nodes_.push_back(std::move(n));
    net.adjacency_.emplace_back();
  }
  const auto edge_count = in.u64();
  for (std::uint64_t i = 0; i < edge_count; ++i) {
    const auto a = in.u64();
    const auto b = in.u64();
    const auto age = in.u32();
    if (a >= b || !net.contains(a) || !net.contains(b) || net.edges_.count({a, b}) != 0) {
      throw CorruptionError("SOINN snapshot has an invalid edge");
    }
    try {
      net.set_edge(a, b, age);
    } catch (const InvariantError& e) {
      throw CorruptionError(std::string("SOINN snapshot edge: ") + e.what());
    }
  }
  return net;
}

void SoinnNetwork::save(const std::filesystem::path& path) const {
  ByteWriter w;
  write(w);
  write_file_bytes(path, frame_payload(kSoinnMagic, kSoinnVersion, w.bytes()));
}

SoinnNetwork SoinnNetwork::load(const std::filesystem::path& path) {
  const auto payload = unframe_payload(read_file_bytes(path), kSoinnMagic, kSoinnVersion,
                                       "SOINN snapshot");
  ByteReader r(payload);
  auto net = read(r);
  if (!r.at_end()) throw CorruptionError("SOINN snapshot has trailing bytes");
  return net;
}

}  // namespace nsoinn
