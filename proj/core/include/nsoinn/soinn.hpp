#pragma once

// Streaming topology-learning clusterer (SOINN) with the win-cap rule of
// n-SOINN and squared Euclidean distances.
//
// A network holds prototype nodes joined by aging edges. Each input either
// spawns a node (it lies outside the similarity threshold of its two nearest
// nodes, or both are saturated under the win cap) or is absorbed by a winner,
// which moves towards it together with its topological neighbours. Every
// `lambda` inputs edges older than `age_max` are dropped and isolated nodes
// are removed.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace nsoinn {

class ByteReader;
class ByteWriter;

using NodeId = std::uint64_t;

struct SoinnParams {
  std::uint32_t win_cap = 0;  // n; 0 disables the win-cap rule
  std::uint32_t age_max = 100;
  std::uint32_t lambda = 100;
  double neighbor_rate_divisor = 100.0;

  // Throws ConfigError when a field is out of range.
  void validate() const;

  friend bool operator==(const SoinnParams&, const SoinnParams&) = default;
};

struct SoinnNode {
  NodeId id = 0;
  std::vector<double> weight;
  std::uint64_t wins = 0;  // M

  friend bool operator==(const SoinnNode&, const SoinnNode&) = default;
};

struct SoinnEdge {
  NodeId a = 0;  // a < b
  NodeId b = 0;
  std::uint32_t age = 0;

  friend bool operator==(const SoinnEdge&, const SoinnEdge&) = default;
};

struct SoinnEvent {
  enum class Kind : std::uint8_t { NodeCreated, WinnerUpdated };
  Kind kind = Kind::NodeCreated;
  NodeId node = 0;  // the created node, or the node that received the win

  friend bool operator==(const SoinnEvent&, const SoinnEvent&) = default;
};

struct Winners {
  NodeId first = 0;
  NodeId second = 0;
  double first_distance = 0.0;
  double second_distance = 0.0;
};

// Sum of squared component differences. Throws InvariantError on a
// dimension mismatch.
double squared_distance(std::span<const double> a, std::span<const double> b);

class SoinnNetwork {
 public:
  SoinnNetwork(std::size_t dimension, SoinnParams params);

  SoinnEvent process_input(std::span<const double> x);

  // Nearest and second-nearest nodes; ties go to the smaller id.
  Winners find_winners(std::span<const double> x) const;

  // Largest squared distance to a neighbour, or the smallest squared
  // distance to any other node when the node is isolated.
  double similarity_threshold(NodeId id) const;

  // Drops over-aged edges, then isolated nodes. When every node is isolated,
  // the two with the most wins survive. Returns the number of removed nodes.
  std::size_t cleanup();

  // Node weights in id order.
  std::vector<std::vector<double>> export_nodes() const;

  std::size_t connected_components() const;

  // Direct construction, used for snapshots and hand-built fixtures.
  NodeId add_node(std::vector<double> weight, std::uint64_t wins = 0);
  void set_edge(NodeId a, NodeId b, std::uint32_t age = 0);

  std::size_t dimension() const noexcept { return dimension_; }
  const SoinnParams& params() const noexcept { return params_; }
  std::uint64_t inputs_seen() const noexcept { return inputs_seen_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const SoinnNode> nodes() const noexcept { return nodes_; }
  const SoinnNode& node(NodeId id) const;
  bool contains(NodeId id) const noexcept;
  std::vector<SoinnEdge> edges() const;
  std::vector<NodeId> neighbors(NodeId id) const;

  void write(ByteWriter& out) const;
  static SoinnNetwork read(ByteReader& in);

  // Standalone snapshot file (magic "NSOINNSN").
  void save(const std::filesystem::path& path) const;
  static SoinnNetwork load(const std::filesystem::path& path);

  friend bool operator==(const SoinnNetwork&, const SoinnNetwork&) = default;

 private:
  using EdgeKey = std::pair<NodeId, NodeId>;

  static EdgeKey key(NodeId a, NodeId b) noexcept { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

  std::size_t index_of(NodeId id) const;
  NodeId create_node(std::span<const double> x);
  void erase_edge(NodeId a, NodeId b);
  void check_input(std::span<const double> x) const;

  std::size_t dimension_;
  SoinnParams params_;
  std::uint64_t inputs_seen_ = 0;
  NodeId next_id_ = 0;
  std::vector<SoinnNode> nodes_;                // sorted by id
  std::vector<std::vector<NodeId>> adjacency_;  // parallel to nodes_, sorted
  std::map<EdgeKey, std::uint32_t> edges_;
};

}  // namespace nsoinn
