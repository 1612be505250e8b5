#include "explink/hac.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace explink {

std::vector<int> Dendrogram::leaf_ids(int node) const {
  std::vector<int> out;
  for (int leaf : leaf_indices(node)) out.push_back(nodes[leaf].point_id);
  return out;
}

std::vector<int> Dendrogram::leaf_indices(int node) const {
  std::vector<int> out, stack{node};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (is_leaf(id)) {
      out.push_back(id);
    } else {
      stack.push_back(nodes[id].left);
      stack.push_back(nodes[id].right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

HacEngine::HacEngine(int n, DissimFn f, LinkageSpec linkage,
                     std::vector<int> point_ids)
    : f_(std::move(f)), linkage_(linkage) {
  if (n < 1) throw std::invalid_argument("HAC needs a nonempty dataset");
  if (point_ids.empty()) {
    point_ids.resize(n);
    for (int i = 0; i < n; ++i) point_ids[i] = i;
  }
  if (static_cast<int>(point_ids.size()) != n) {
    throw std::invalid_argument("point_ids size mismatch");
  }
  tree_.n_leaves = n;
  tree_.nodes.resize(n);
  members_.resize(n);
  for (int i = 0; i < n; ++i) {
    tree_.nodes[i].point_id = point_ids[i];
    members_[i] = {i};
    active_.push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      stats_.emplace(pair_key(i, j),
                     LinkageStats::single_value(f_(i, j), linkage_.alpha));
    }
  }
}

const std::vector<int>& HacEngine::members(int cluster) const {
  return members_.at(cluster);
}

const LinkageStats& HacEngine::stats(int a, int b) const {
  auto it = stats_.find(pair_key(a, b));
  if (it == stats_.end()) {
    throw std::invalid_argument("no stats for the requested cluster pair");
  }
  return it->second;
}

double HacEngine::pair_value(int a, int b) const {
  return linkage_value(stats(a, b), linkage_);
}

std::pair<int, int> HacEngine::best_pair() const {
  if (active_count() < 2) throw std::invalid_argument("fewer than 2 clusters");
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> arg{-1, -1};
  for (std::size_t i = 0; i < active_.size(); ++i) {
    for (std::size_t j = i + 1; j < active_.size(); ++j) {
      const double v = pair_value(active_[i], active_[j]);
      if (v < best) {
        best = v;
        arg = {active_[i], active_[j]};
      }
    }
  }
  return arg;
}

int HacEngine::merge(int a, int b) {
  if (a > b) std::swap(a, b);
  auto pos_a = std::find(active_.begin(), active_.end(), a);
  auto pos_b = std::find(active_.begin(), active_.end(), b);
  if (a == b || pos_a == active_.end() || pos_b == active_.end()) {
    throw std::invalid_argument("merge of a non-active cluster pair");
  }
  const double height = pair_value(a, b);
  const int id = static_cast<int>(tree_.nodes.size());

  Dendrogram::Node node;
  node.left = a;
  node.right = b;
  node.height = height;
  tree_.nodes.push_back(node);

  members_.emplace_back(members_[a]);
  auto& m = members_.back();
  m.insert(m.end(), members_[b].begin(), members_[b].end());
  std::sort(m.begin(), m.end());

  active_.erase(std::find(active_.begin(), active_.end(), b));
  active_.erase(std::find(active_.begin(), active_.end(), a));
  for (int c : active_) {
    stats_.emplace(pair_key(id, c),
                   merge_stats(stats(a, c), stats(b, c), linkage_.alpha));
    stats_.erase(pair_key(a, c));
    stats_.erase(pair_key(b, c));
  }
  stats_.erase(pair_key(a, b));
  active_.push_back(id);  // ids are created in ascending order
  return id;
}

void HacEngine::step() {
  auto [a, b] = best_pair();
  merge(a, b);
}

Dendrogram HacEngine::finish() {
  while (active_count() > 1) step();
  return tree_;
}

Dendrogram build_dendrogram(int n, DissimFn f, LinkageSpec linkage,
                            std::vector<int> point_ids) {
  HacEngine engine(n, std::move(f), linkage, std::move(point_ids));
  return engine.finish();
}

namespace {

void cut_rec(const Dendrogram& tree, int node, double xi, FlatClustering& out) {
  const auto& nd = tree.nodes[node];
  if (!tree.is_leaf(node) && nd.height > xi) {
    cut_rec(tree, nd.left, xi, out);
    cut_rec(tree, nd.right, xi, out);
    return;
  }
  const int cluster = out.n_clusters++;
  for (int pid : tree.leaf_ids(node)) out.assignment[pid] = cluster;
}

}  // namespace

FlatClustering cut_tree(const Dendrogram& tree, double xi) {
  FlatClustering out;
  cut_rec(tree, tree.root(), xi, out);
  return out;
}

FlatClustering cut_to_k(const Dendrogram& tree, int k) {
  if (k < 1 || k > tree.n_leaves) {
    throw std::invalid_argument("cut_to_k: k out of range");
  }
  // Undo merges newest-first: split the highest-id node until k parts remain.
  std::vector<int> parts{tree.root()};
  while (static_cast<int>(parts.size()) < k) {
    auto it = std::max_element(parts.begin(), parts.end());
    const int node = *it;
    parts.erase(it);
    parts.push_back(tree.nodes[node].left);
    parts.push_back(tree.nodes[node].right);
  }
  std::sort(parts.begin(), parts.end());
  FlatClustering out;
  for (int node : parts) {
    const int cluster = out.n_clusters++;
    for (int pid : tree.leaf_ids(node)) out.assignment[pid] = cluster;
  }
  return out;
}

}  // namespace explink
