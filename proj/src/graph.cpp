#include "isrfd/graph.hpp"

#include <algorithm>
#include <bit>

#include "isrfd/errors.hpp"

namespace isrfd {

LinkGraph::LinkGraph(int n) : n_(n) {
  if (n < 1 || n > 64) throw ConfigError("LinkGraph: vertex count must be in [1, 64]");
  adj_all_.assign(n, 0);
  adj_measured_.assign(n, 0);
  provenance_.assign(static_cast<size_t>(n) * n, EdgeProvenance::measured);
}

void LinkGraph::add_edge(int i, int j, EdgeProvenance p) {
  if (i == j) throw ConfigError("LinkGraph: self-loop");
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw ConfigError("LinkGraph: vertex out of range");
  if (!has_edge(i, j)) ++edge_count_;
  adj_all_[i] |= (1ULL << j);
  adj_all_[j] |= (1ULL << i);
  if (p == EdgeProvenance::measured) {
    adj_measured_[i] |= (1ULL << j);
    adj_measured_[j] |= (1ULL << i);
  }
  provenance_[static_cast<size_t>(i) * n_ + j] = p;
  provenance_[static_cast<size_t>(j) * n_ + i] = p;
}

bool LinkGraph::has_edge(int i, int j) const { return (adj_all_[i] >> j) & 1ULL; }
bool LinkGraph::has_measured_edge(int i, int j) const { return (adj_measured_[i] >> j) & 1ULL; }
int LinkGraph::degree(int v) const { return std::popcount(adj_all_[v]); }
int LinkGraph::measured_degree(int v) const { return std::popcount(adj_measured_[v]); }

std::vector<GraphEdge> LinkGraph::edges() const {
  std::vector<GraphEdge> out;
  out.reserve(edge_count_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (has_edge(i, j))
        out.push_back({i, j, provenance_[static_cast<size_t>(i) * n_ + j]});
  return out;
}

int pair_index(int a, int b) {
  // (0,1)..(0,4),(1,2)..(1,4),(2,3),(2,4),(3,4)
  return a * (9 - a) / 2 + (b - a - 1);
}

namespace {

// Degeneracy order: repeatedly remove a minimum-degree vertex.
std::vector<int> degeneracy_order(const LinkGraph& g) {
  const int n = g.size();
  std::vector<std::uint64_t> adj(n);
  for (int v = 0; v < n; ++v) adj[v] = g.measured_adjacency(v);
  std::uint64_t alive = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
  std::vector<int> order;
  order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1, best_deg = 65;
    for (int v = 0; v < n; ++v) {
      if (!((alive >> v) & 1ULL)) continue;
      int d = std::popcount(adj[v] & alive);
      if (d < best_deg) {
        best_deg = d;
        best = v;
      }
    }
    order.push_back(best);
    alive &= ~(1ULL << best);
  }
  return order;
}

void extend_clique(const std::vector<std::uint64_t>& adj, std::uint64_t cands, int k_left,
                   std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  if (k_left == 0) {
    out.push_back(prefix);
    return;
  }
  // Not enough candidates to finish the clique.
  if (std::popcount(cands) < k_left) return;
  std::uint64_t c = cands;
  while (c) {
    int v = std::countr_zero(c);
    c &= c - 1;
    prefix.push_back(v);
    extend_clique(adj, cands & adj[v] & ~((2ULL << v) - 1), k_left - 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<std::vector<int>> list_k_cliques(const LinkGraph& graph, int k) {
  if (k < 2) throw ConfigError("list_k_cliques: k must be >= 2");
  const int n = graph.size();

  // Relabel into degeneracy order so candidate sets shrink quickly, then
  // recurse over "later" neighbors only: each clique comes out once.
  std::vector<int> order = degeneracy_order(graph);
  std::vector<int> rank(n);
  for (int r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<std::uint64_t> adj(n, 0);
  for (int v = 0; v < n; ++v) {
    std::uint64_t m = graph.measured_adjacency(v);
    while (m) {
      int u = std::countr_zero(m);
      m &= m - 1;
      adj[rank[v]] |= (1ULL << rank[u]);
    }
  }

  std::uint64_t all = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
  std::vector<std::vector<int>> found;
  std::vector<int> prefix;
  extend_clique(adj, all, k, prefix, found);

  // Map back to original labels, canonical sorted members, lexicographic list.
  for (auto& c : found) {
    for (int& v : c) v = order[v];
    std::sort(c.begin(), c.end());
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<SubgraphRecord> list_5_cliques(const LinkGraph& graph) {
  std::vector<SubgraphRecord> out;
  for (const auto& c : list_k_cliques(graph, 5)) {
    SubgraphRecord rec;
    std::copy(c.begin(), c.end(), rec.members.begin());
    rec.edge_provenance.fill(EdgeProvenance::measured);
    out.push_back(rec);
  }
  return out;
}

std::vector<SubgraphRecord> list_fault_detectable_5(const LinkGraph& graph) {
  const int n = graph.size();
  std::vector<int> eligible;  // vertices with at least one measured edge anywhere
  for (int v = 0; v < n; ++v)
    if (graph.measured_degree(v) > 0) eligible.push_back(v);

  std::vector<SubgraphRecord> out;
  const int m = static_cast<int>(eligible.size());
  if (m < 5) return out;

  std::array<int, 5> idx{0, 1, 2, 3, 4};
  while (true) {
    std::array<int, 5> mem;
    std::uint64_t mask = 0;
    for (int t = 0; t < 5; ++t) {
      mem[t] = eligible[idx[t]];
      mask |= (1ULL << mem[t]);
    }
    bool covered = true;
    for (int t = 0; t < 5 && covered; ++t)
      covered = (graph.measured_adjacency(mem[t]) & mask) != 0;
    if (covered) {
      SubgraphRecord rec;
      rec.members = mem;
      for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b)
          rec.edge_provenance[pair_index(a, b)] = graph.has_measured_edge(mem[a], mem[b])
                                                      ? EdgeProvenance::measured
                                                      : EdgeProvenance::computed;
      out.push_back(rec);
    }
    // next 5-combination
    int t = 4;
    while (t >= 0 && idx[t] == m - 5 + t) --t;
    if (t < 0) break;
    ++idx[t];
    for (int u = t + 1; u < 5; ++u) idx[u] = idx[u - 1] + 1;
  }
  return out;
}

std::vector<SubgraphRecord> subgraphs_excluding(const std::vector<SubgraphRecord>& records,
                                                int satellite) {
  std::vector<SubgraphRecord> out;
  for (const auto& r : records)
    if (!r.contains(satellite)) out.push_back(r);
  return out;
}

int count_excluding(const std::vector<SubgraphRecord>& records, int satellite) {
  int c = 0;
  for (const auto& r : records)
    if (!r.contains(satellite)) ++c;
  return c;
}

}  // namespace isrfd
