// SPDX-License-Identifier: Apache-2.0
//
// Concrete reference interpreter: runs the graph's shape and integer-value
// semantics on fully bound inputs, evaluates Switch predicates, tracks
// liveness/peak memory, and validates plans against the resulting ground
// truth. Deliberately implemented over plain integer vectors, independent
// of the analysis lattice code, so the two act as cross-checking oracles.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dyndag/exec.hpp"
#include "dyndag/mem.hpp"

namespace dyndag {

struct ConcreteEnv {
  std::map<std::string, std::int64_t> symbols;
  // Concrete payloads for integer input tensors (rank <= 1).
  std::map<std::string, std::vector<std::int64_t>> values;
  // Switch node id -> taken gate index.
  std::map<std::string, int> branches;
  // Data-dependent outcomes, keyed by node id (single output) or
  // "<node id>:<output index>"; value = the output shape.
  std::map<std::string, std::vector<std::int64_t>> outcomes;
  std::uint64_t seed = 0;  // drives deterministic pseudo-outcomes when unset
};

struct Trace {
  std::vector<std::string> executed;  // node ids, in execution order
  std::map<std::string, std::vector<std::int64_t>> shapes;
  std::map<std::string, std::vector<std::int64_t>> values;  // tracked ints
  std::vector<std::int64_t> live_bytes;                     // per executed step
  std::int64_t peak = 0;
  std::map<std::string, int> taken;  // Switch node id -> branch
};

// Executes the graph under `env`. `order` (node ids) defaults to the
// deterministic topological order; non-taken Switch branches are skipped.
// Throws Error(Analysis) on a runtime shape mismatch, naming the node.
Trace interpret(const Graph& g, const ConcreteEnv& env,
                const std::vector<std::string>* order = nullptr);

struct CheckReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Re-executes with the planned order and asserts: (a) the order is
// topological, (b) interpreter peaks match substituted plan peaks for
// non-heuristic subgraphs, (c) the memory plan is overlap-free under actual
// lifetimes, (d) its arena covers the actual peak.
CheckReport check_plan(const Graph& g, const ConcreteEnv& env, const ExecPlan& exec,
                       const MemPlan& mem);

// Byte sizes of node-produced tensors in a trace (shape product x element
// size), for feeding the memory planner.
std::map<std::string, std::int64_t> trace_sizes(const Graph& g, const Trace& trace);

}  // namespace dyndag
