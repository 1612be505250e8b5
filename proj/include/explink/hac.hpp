#ifndef EXPLINK_HAC_HPP
#define EXPLINK_HAC_HPP

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "explink/linkage.hpp"

namespace explink {

// Binary merge tree. Nodes 0..n-1 are leaves (point_id set), internal nodes
// follow in creation order; the root is the last node.
struct Dendrogram {
  struct Node {
    int left = -1;
    int right = -1;
    double height = 0.0;
    int point_id = -1;  // leaves only
  };
  std::vector<Node> nodes;
  int n_leaves = 0;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
  bool is_leaf(int id) const { return id < n_leaves; }
  std::vector<int> leaf_ids(int node) const;       // point ids under node
  std::vector<int> leaf_indices(int node) const;   // leaf node ids under node
};

// point-id -> contiguous cluster id
struct FlatClustering {
  std::unordered_map<int, int> assignment;
  int n_clusters = 0;
};

// Pairwise dissimilarity over local point indices 0..n-1.
using DissimFn = std::function<double(int, int)>;

// Greedy agglomerative engine over mergeable linkage stats. Exposes single
// rounds and forced merges so training can drive it.
class HacEngine {
 public:
  // point_ids give the leaf labels of the resulting dendrogram; pass {} for
  // the identity.
  HacEngine(int n, DissimFn f, LinkageSpec linkage,
            std::vector<int> point_ids = {});

  int active_count() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active() const { return active_; }  // ascending ids
  const std::vector<int>& members(int cluster) const;  // local point indices
  double pair_value(int a, int b) const;

  // Cheapest active pair; ties broken by smallest (a, b) in creation order.
  std::pair<int, int> best_pair() const;

  // Merge a specific active pair; the new cluster's id is returned.
  int merge(int a, int b);

  // One HAC round: merge best_pair(). Throws if fewer than 2 clusters remain.
  void step();

  // Run remaining rounds and return the tree.
  Dendrogram finish();
  const Dendrogram& tree() const { return tree_; }

 private:
  const LinkageStats& stats(int a, int b) const;

  DissimFn f_;
  LinkageSpec linkage_;
  std::vector<int> active_;
  std::vector<std::vector<int>> members_;  // by cluster id
  std::unordered_map<std::uint64_t, LinkageStats> stats_;
  Dendrogram tree_;
};

Dendrogram build_dendrogram(int n, DissimFn f, LinkageSpec linkage,
                            std::vector<int> point_ids = {});

// Recursive descent: descend while an internal node's height exceeds xi,
// otherwise emit the node's leaves as one cluster. Robust to inversions.
FlatClustering cut_tree(const Dendrogram& tree, double xi);

// The k clusters present when HAC had k clusters left (undo the last k-1
// merges).
FlatClustering cut_to_k(const Dendrogram& tree, int k);

}  // namespace explink

#endif
