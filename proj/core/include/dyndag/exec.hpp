// SPDX-License-Identifier: Apache-2.0
//
// Execution-order planning: partition the graph at statically-unknowable
// (nac) boundaries, then pick a per-subgraph operator order minimizing peak
// intermediate-tensor memory — exhaustively for small all-known subgraphs,
// by symbolic comparison when sizes share symbols, greedily otherwise.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyndag/rdp.hpp"

namespace dyndag {

enum class SubgraphCategory { AllKnown, MixedConst, NacBounded };
enum class OrderMethod { Exhaustive, SymbolicCompare, Heuristic };

std::string category_name(SubgraphCategory c);
std::string method_name(OrderMethod m);

struct SubgraphPlan {
  int id = 0;
  std::vector<std::string> members;  // node ids
  SubgraphCategory category = SubgraphCategory::AllKnown;
  std::vector<std::string> order;  // node ids, a topological order of members
  // Peak intermediate bytes: a literal for all-known subgraphs, symbolic
  // for mixed-const ones, absent (deferred to runtime) when nac-bounded.
  std::optional<SymExpr> peak;
  OrderMethod method = OrderMethod::Heuristic;
};

struct ExecPlan {
  std::vector<SubgraphPlan> subgraphs;
  std::vector<std::string> boundary_tensors;
  std::vector<std::string> global_order;  // node ids, whole-graph topological
};

// Nac-boundary partition: every node with a nac output dim terminates its
// subgraph; Switch/Combine regions stay whole. Returns member node indices
// per subgraph, in a valid cross-subgraph execution order.
std::vector<std::vector<int>> partition(const Graph& g, const RdpResult& rdp);

struct OrderResult {
  std::vector<int> order;  // node indices
  std::int64_t peak = 0;
};

// Minimal-peak order by memoized search over executed-node subsets.
// `sizes` gives concrete bytes for member-produced tensors (missing entries
// count as zero). Throws Error(Input) when members exceed `cap`.
OrderResult order_exhaustive(const Graph& g, const std::vector<int>& members,
                             const std::map<std::string, std::int64_t>& sizes,
                             int cap = 12);

struct SymOrderResult {
  std::vector<int> order;
  SymExpr peak;
  bool determinate = true;  // false when any comparison needed the probe
};

// Same search with symbolic sizes; candidate peaks are compared by the sign
// of their difference, falling back to a probe assignment (every symbol =
// `probe`) when the sign is indeterminate.
SymOrderResult order_symbolic(const Graph& g, const std::vector<int>& members,
                              const std::map<std::string, SymExpr>& sizes,
                              int cap = 12, std::int64_t probe = 16);

// Greedy fallback: repeatedly run the ready node minimizing the post-step
// live total under `probe_sizes`; ties by smallest node id.
std::vector<int> order_heuristic(const Graph& g, const std::vector<int>& members,
                                 const std::map<std::string, std::int64_t>& probe_sizes);

struct ExecOptions {
  int exhaustive_cap = 12;
  std::int64_t probe = 16;
};

ExecPlan build_exec_plan(const Graph& g, const RdpResult& rdp,
                         const ExecOptions& opts = {});

}  // namespace dyndag
