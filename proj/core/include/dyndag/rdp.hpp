// SPDX-License-Identifier: Apache-2.0
//
// Rank-and-dimension propagation: a bidirectional fixpoint analysis that
// assigns every tensor a ShapeInfo (S-map) and a tracked-value ValueInfo
// (V-map) by sweeping the graph forward and backward until nothing changes.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dyndag/graph.hpp"
#include "dyndag/ops.hpp"

namespace dyndag {

struct AnalysisState {
  std::map<std::string, ShapeInfo> shapes;
  std::map<std::string, ValueInfo> values;
  int iterations = 0;
  bool changed = false;
};

struct RdpResult {
  std::map<std::string, ShapeInfo> shapes;
  std::map<std::string, ValueInfo> values;
  std::map<std::string, DynClass> node_class;  // node id -> effective class
  std::set<std::string> nac_nodes;             // nodes with a nac output dim
  SymbolTable symtab;
  int iterations = 0;
};

struct RdpOptions {
  int value_cap = 32;
  // Optional sweep order (node indices); defaults to the graph's
  // deterministic topological order. Used to test order independence.
  std::vector<int> sweep_order;
};

RdpResult run_rdp(const Graph& g, const RdpOptions& opts = {});

struct ConcreteShapes {
  // Fully concrete shapes; tensors with nac dims or analysis-generated
  // symbols missing from env are listed separately.
  std::map<std::string, std::vector<std::int64_t>> shapes;
  std::vector<std::string> dynamic_only;
  std::vector<std::string> unresolved;  // still Undef (disconnected)
};

// Evaluates every S-map entry under env. env must bind all declared graph
// symbols; bindings for analysis-generated "$..." symbols are optional
// (entries needing them are reported as dynamic-only when absent).
ConcreteShapes substitute(const RdpResult& result,
                          const std::map<std::string, std::int64_t>& env);

// Byte size of a ranked, nac-free, undef-free shape as a symbolic
// expression (product of dims times element size); nullopt otherwise.
std::optional<SymExpr> tensor_bytes(const ShapeInfo& s, DType dtype);

}  // namespace dyndag
