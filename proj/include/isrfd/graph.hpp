#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace isrfd {

enum class EdgeProvenance { measured, computed };

struct GraphEdge {
  int i = 0;  // canonical i < j
  int j = 0;
  EdgeProvenance provenance = EdgeProvenance::measured;
};

/// Per-epoch undirected link graph. Vertices are satellite indices; adjacency
/// is kept as 64-bit masks, so at most 64 vertices are supported (well above
/// any constellation treated here).
class LinkGraph {
 public:
  explicit LinkGraph(int n);

  int size() const { return n_; }
  void add_edge(int i, int j, EdgeProvenance p = EdgeProvenance::measured);
  bool has_edge(int i, int j) const;
  bool has_measured_edge(int i, int j) const;
  int degree(int v) const;
  int measured_degree(int v) const;
  std::uint64_t measured_adjacency(int v) const { return adj_measured_[v]; }

  /// Edges in canonical (i, j) lexicographic order.
  std::vector<GraphEdge> edges() const;
  int edge_count() const { return edge_count_; }

 private:
  int n_;
  int edge_count_ = 0;
  std::vector<std::uint64_t> adj_all_;
  std::vector<std::uint64_t> adj_measured_;
  std::vector<EdgeProvenance> provenance_;  // n*n, row-major, valid where adjacent
};

/// One 5-node subgraph used for EDM testing. Members are sorted ascending;
/// edge_provenance follows the canonical pair order
/// (0,1),(0,2),(0,3),(0,4),(1,2),(1,3),(1,4),(2,3),(2,4),(3,4).
struct SubgraphRecord {
  std::array<int, 5> members{};
  std::array<EdgeProvenance, 10> edge_provenance{};

  bool contains(int v) const {
    for (int m : members)
      if (m == v) return true;
    return false;
  }
};

/// Index of pair (a, b), a < b < 5, in the canonical order above.
int pair_index(int a, int b);

/// All k-cliques of the measured-edge graph, as sorted vertex lists in
/// lexicographic output order. Degeneracy-ordered recursion; each clique is
/// emitted exactly once.
std::vector<std::vector<int>> list_k_cliques(const LinkGraph& graph, int k);

/// 5-cliques of the measured-edge graph as SubgraphRecords (all edges measured).
std::vector<SubgraphRecord> list_5_cliques(const LinkGraph& graph);

/// All 5-vertex sets that become complete after filling missing pairs with
/// ephemeris-computed edges and in which every member touches at least one
/// measured edge inside the set. 5-subsets containing a vertex with no
/// measured edges at all are pruned up front.
std::vector<SubgraphRecord> list_fault_detectable_5(const LinkGraph& graph);

/// Subsequence of records whose member set excludes `satellite`.
std::vector<SubgraphRecord> subgraphs_excluding(const std::vector<SubgraphRecord>& records,
                                                int satellite);

/// Count of records excluding `satellite` (N_{G,i}) without materializing them.
int count_excluding(const std::vector<SubgraphRecord>& records, int satellite);

}  // namespace isrfd
