#ifndef TOMO_TOPOLOGY_HPP
#define TOMO_TOPOLOGY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tomo/error.hpp"

namespace tomo {

using NodeId = std::string;

/// A multicast tree rooted at the probe source.
///
/// Edges are stored in breadth-first order from the root, siblings kept in the
/// order they were first listed. That order is the column order of the routing
/// matrix; link j is the edge into `edges()[j].second`.
class TreeTopology {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  TreeTopology(NodeId root, const std::vector<Edge>& edges, std::vector<NodeId> leaves)
      : root_(std::move(root)), leaves_(std::move(leaves)) {
    std::map<NodeId, NodeId> parent;
    std::map<NodeId, std::vector<NodeId>> children;
    std::set<NodeId> nodes{root_};
    for (const auto& [p, c] : edges) {
      if (p == c) throw TopologyError("self loop at node " + p);
      if (c == root_) throw TopologyError("root " + root_ + " has a parent");
      if (!parent.emplace(c, p).second) throw TopologyError("node " + c + " has more than one parent");
      children[p].push_back(c);
      nodes.insert(p);
      nodes.insert(c);
    }
    if (children[root_].empty()) throw TopologyError("root " + root_ + " has no children");

    // BFS also detects unreachable nodes; with unique parents that rules out cycles.
    std::deque<NodeId> queue{root_};
    std::set<NodeId> seen{root_};
    nodes_.push_back(root_);
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop_front();
      for (const auto& c : children[u]) {
        if (!seen.insert(c).second) throw TopologyError("cycle through node " + c);
        edges_.emplace_back(u, c);
        nodes_.push_back(c);
        queue.push_back(c);
      }
    }
    if (seen.size() != nodes.size()) throw TopologyError("tree is disconnected from root " + root_);

    std::set<NodeId> childless;
    for (const auto& n : nodes_) {
      auto it = children.find(n);
      std::size_t deg = it == children.end() ? 0 : it->second.size();
      if (deg == 0) childless.insert(n);
      if (n != root_ && deg == 1) throw TopologyError("internal node " + n + " has a single child");
    }
    std::set<NodeId> listed(leaves_.begin(), leaves_.end());
    if (listed.size() != leaves_.size()) throw TopologyError("duplicate leaf id");
    if (listed != childless) throw TopologyError("leaf list does not match the childless nodes of the tree");

    for (std::size_t j = 0; j < edges_.size(); ++j) edge_index_[edges_[j].second] = j;
    parent_ = std::move(parent);
  }

  const NodeId& root() const { return root_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& leaves() const { return leaves_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }

  /// Column indices of the edges on the root -> node path, root side first.
  std::vector<std::size_t> path_edges(const NodeId& node) const {
    std::vector<std::size_t> path;
    NodeId cur = node;
    while (cur != root_) {
      auto it = edge_index_.find(cur);
      if (it == edge_index_.end()) throw TopologyError("unknown node " + node);
      path.push_back(it->second);
      cur = parent_.at(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

 private:
  NodeId root_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> nodes_;
  std::vector<Edge> edges_;
  std::map<NodeId, std::size_t> edge_index_;
  std::map<NodeId, NodeId> parent_;
};

/// Binary I x J path-incidence matrix: Y = A X.
class RoutingMatrix {
 public:
  RoutingMatrix() = default;

  /// Wraps an arbitrary 0/1 matrix (used by the rank check on non-tree routings).
  explicit RoutingMatrix(Eigen::MatrixXd entries, std::vector<std::string> edge_order = {})
      : entries_(std::move(entries)), edge_order_(std::move(edge_order)) {
    for (Eigen::Index i = 0; i < entries_.rows(); ++i)
      for (Eigen::Index j = 0; j < entries_.cols(); ++j)
        if (entries_(i, j) != 0.0 && entries_(i, j) != 1.0)
          throw ConfigError("routing matrix entries must be 0 or 1");
    for (Eigen::Index j = 0; j < entries_.cols(); ++j)
      if (entries_.col(j).sum() == 0.0) throw ConfigError("routing matrix column " + std::to_string(j + 1) + " is empty");
    if (edge_order_.empty())
      for (Eigen::Index j = 0; j < entries_.cols(); ++j) edge_order_.push_back(std::to_string(j + 1));
    if (edge_order_.size() != static_cast<std::size_t>(entries_.cols()))
      throw ConfigError("edge_order length does not match the column count");
  }

  const Eigen::MatrixXd& entries() const { return entries_; }
  std::size_t rows() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(entries_.cols()); }
  const std::vector<std::string>& edge_order() const { return edge_order_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> edge_order_;
};

/// Rows of A followed by A_i .* A_k for all i < k in lexicographic order.
struct ProductMatrix {
  Eigen::MatrixXd entries;
};

inline RoutingMatrix routing_matrix(const TreeTopology& topology) {
  const auto I = static_cast<Eigen::Index>(topology.leaf_count());
  const auto J = static_cast<Eigen::Index>(topology.edge_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(I, J);
  for (Eigen::Index i = 0; i < I; ++i)
    for (std::size_t j : topology.path_edges(topology.leaves()[static_cast<std::size_t>(i)]))
      a(i, static_cast<Eigen::Index>(j)) = 1.0;
  std::vector<std::string> order;
  for (const auto& e : topology.edges()) order.push_back(e.second);
  return RoutingMatrix(std::move(a), std::move(order));
}

inline ProductMatrix product_matrix(const RoutingMatrix& a) {
  const auto I = static_cast<Eigen::Index>(a.rows());
  const auto J = static_cast<Eigen::Index>(a.cols());
  Eigen::MatrixXd b(I * (I + 1) / 2, J);
  b.topRows(I) = a.entries();
  Eigen::Index row = I;
  for (Eigen::Index i = 0; i < I; ++i)
    for (Eigen::Index k = i + 1; k < I; ++k)
      b.row(row++) = a.entries().row(i).cwiseProduct(a.entries().row(k));
  return {std::move(b)};
}

/// Pairs (i, k) labelling the rows of the product matrix, diagonal pairs first.
inline std::vector<std::pair<std::size_t, std::size_t>> product_row_pairs(std::size_t leaves) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < leaves; ++i) out.emplace_back(i, i);
  for (std::size_t i = 0; i < leaves; ++i)
    for (std::size_t k = i + 1; k < leaves; ++k) out.emplace_back(i, k);
  return out;
}

/// Numerical rank: singular values below 1e-9 * sigma_max count as zero.
inline std::size_t column_rank(const Eigen::MatrixXd& m, double relative_tolerance = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > relative_tolerance * s(0)) ++rank;
  return rank;
}

inline std::size_t column_rank(const ProductMatrix& b) { return column_rank(b.entries); }

// Reference trees. Node ids follow the usual numbering: root "0", link j ends at node j.

inline TreeTopology two_leaf_tree() {
  return TreeTopology("0", {{"0", "1"}, {"1", "2"}, {"1", "3"}}, {"2", "3"});
}

inline TreeTopology four_leaf_tree() {
  return TreeTopology("0", {{"0", "1"}, {"1", "2"}, {"1", "3"}, {"2", "4"}, {"2", "5"}, {"3", "6"}, {"3", "7"}},
                      {"4", "5", "6", "7"});
}

/// Root with a single child followed by a complete binary tree with 2^depth leaves.
inline TreeTopology binary_tree(std::size_t depth) {
  std::vector<TreeTopology::Edge> edges{{"0", "1"}};
  std::vector<NodeId> leaves;
  const std::size_t first_leaf = std::size_t{1} << depth;
  for (std::size_t n = 1; n < first_leaf; ++n) {
    edges.emplace_back(std::to_string(n), std::to_string(2 * n));
    edges.emplace_back(std::to_string(n), std::to_string(2 * n + 1));
  }
  for (std::size_t n = first_leaf; n < 2 * first_leaf; ++n) leaves.push_back(std::to_string(n));
  if (depth == 0) leaves = {"1"};
  return TreeTopology("0", edges, leaves);
}

/// Random multicast tree with at most `max_edges` links; every non-root internal node
/// gets two or three children.
template <class Rng>
TreeTopology random_multicast_tree(Rng& rng, std::size_t max_edges) {
  if (max_edges < 1) throw ConfigError("random tree needs at least one edge");
  std::vector<TreeTopology::Edge> edges;
  std::vector<NodeId> open;
  std::size_t next = 1;
  std::uniform_int_distribution<std::size_t> root_kids(1, std::min<std::size_t>(3, max_edges));
  for (std::size_t c = root_kids(rng); c > 0; --c) {
    edges.emplace_back("0", std::to_string(next));
    open.push_back(std::to_string(next++));
  }
  std::uniform_int_distribution<std::size_t> target_dist(edges.size(), max_edges);
  const std::size_t target = target_dist(rng);
  std::uniform_int_distribution<int> fanout(2, 3);
  while (edges.size() + 2 <= target) {
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    std::size_t at = pick(rng);
    NodeId parent = open[at];
    std::size_t kids = std::min<std::size_t>(static_cast<std::size_t>(fanout(rng)), target - edges.size());
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(at));
    for (std::size_t c = 0; c < kids; ++c) {
      edges.emplace_back(parent, std::to_string(next));
      open.push_back(std::to_string(next++));
    }
  }
  // Leaves in BFS-insertion order of their ids.
  std::sort(open.begin(), open.end(), [](const NodeId& a, const NodeId& b) { return std::stoul(a) < std::stoul(b); });
  return TreeTopology("0", edges, open);
}

}  // namespace tomo

#endif  // TOMO_TOPOLOGY_HPP
