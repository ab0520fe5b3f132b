#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diagest/adaptive.hpp"
#include "diagest/core.hpp"
#include "diagest/estimators.hpp"
#include "diagest/linop.hpp"

namespace diagest {

/// Simple undirected graph: symmetric 0/1 adjacency, no self-loops. Node ids
/// from the input file are remapped to 0..n-1 in ascending original order.
template <typename Scalar>
struct Graph {
  Index node_count = 0;
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> adjacency;
  std::vector<std::int64_t> original_ids;
};

/// Reads a SNAP-style edge list: whitespace-separated "u v" pairs, '#'
/// comment lines. Directed edges are symmetrized, self-loops dropped,
/// duplicates deduplicated.
template <typename Scalar>
Graph<Scalar> load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("load_edge_list: cannot open '" + path + "'");

  std::set<std::pair<std::int64_t, std::int64_t>> edges;
  std::set<std::int64_t> nodes;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::int64_t u, v;
    if (!(ls >> u >> v))
      throw invalid_input("load_edge_list: malformed line " + std::to_string(line_no) +
                          " in '" + path + "'");
    std::string extra;
    if (ls >> extra)
      throw invalid_input("load_edge_list: trailing tokens on line " + std::to_string(line_no));
    if (u == v) continue;  // self-loop
    edges.emplace(std::min(u, v), std::max(u, v));
    nodes.insert(u);
    nodes.insert(v);
  }
  if (edges.empty()) throw invalid_input("load_edge_list: empty graph after cleaning");

  Graph<Scalar> g;
  g.original_ids.assign(nodes.begin(), nodes.end());
  std::map<std::int64_t, Index> remap;
  for (Index i = 0; i < static_cast<Index>(g.original_ids.size()); ++i)
    remap[g.original_ids[i]] = i;
  g.node_count = static_cast<Index>(g.original_ids.size());

  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(2 * edges.size());
  for (const auto& [u, v] : edges) {
    const Index i = remap[u], j = remap[v];
    trip.emplace_back(i, j, Scalar(1));
    trip.emplace_back(j, i, Scalar(1));
  }
  g.adjacency.resize(g.node_count, g.node_count);
  g.adjacency.setFromTriplets(trip.begin(), trip.end());
  g.adjacency.makeCompressed();
  return g;
}

enum class TriangleMethod { exact_diag, adaptive, bekas, diagpp, xdiag };

template <typename Scalar>
struct TriangleResult {
  VectorX<Scalar> counts;      // per-vertex triangle counts (estimates)
  long long base_matvecs = 0;  // applications of the adjacency matrix
  Index k = 0;                 // adaptive deflation size, when applicable
  Index m = 0;                 // adaptive probe count, when applicable
  std::vector<std::string> warnings;
};

/// Per-vertex triangle counts diag(A^3)/2, exactly (n basis queries of A^3)
/// or by the chosen stochastic estimator on the cubed operator.
template <typename Scalar>
TriangleResult<Scalar> triangle_counts(const Graph<Scalar>& g, TriangleMethod method,
                                       const ErrorBudget<Scalar>& budget,
                                       ProbeStream<Scalar>& probes, Index matvec_budget) {
  SparseOperator<Scalar> adj(g.adjacency, /*symmetric=*/true, "adjacency");
  PowerOperator<Scalar> cube(adj, 3);
  const Index n = g.node_count;
  TriangleResult<Scalar> out;

  if (method != TriangleMethod::exact_diag && matvec_budget > n)
    out.warnings.push_back("stochastic budget " + std::to_string(matvec_budget) + " on A^3 costs " +
                           std::to_string(3 * matvec_budget) +
                           " adjacency products; the exact diagonal needs only " +
                           std::to_string(3 * n));

  switch (method) {
    case TriangleMethod::exact_diag: {
      out.counts = exact_diagonal(cube).diagonal / Scalar(2);
      break;
    }
    case TriangleMethod::adaptive: {
      AdaptiveOptions<Scalar> opts;
      opts.m_max = matvec_budget;
      auto rep = adaptive_estimate(cube, budget, probes, opts);
      out.counts = rep.diagonal / Scalar(2);
      out.k = rep.k_chosen;
      out.m = rep.m_used;
      break;
    }
    case TriangleMethod::bekas: {
      out.counts = bekas_estimate(cube, probes, matvec_budget).diagonal / Scalar(2);
      break;
    }
    case TriangleMethod::diagpp: {
      out.counts = diagpp_estimate(cube, matvec_budget, probes).diagonal / Scalar(2);
      break;
    }
    case TriangleMethod::xdiag: {
      out.counts = xdiag_estimate(cube, matvec_budget - (matvec_budget % 2), probes).diagonal /
                   Scalar(2);
      break;
    }
  }
  out.base_matvecs = adj.matvec_count();
  return out;
}

using GraphD = Graph<double>;

}  // namespace diagest
