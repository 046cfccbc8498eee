// SPDX-License-Identifier: Apache-2.0
//
// Arena memory planning over concrete tensor lifetimes: the peak-first
// strategy (lay out the peak step, then sweep outward), a chronological
// best-fit baseline, and an exhaustive optimal oracle for small instances.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dyndag/graph.hpp"

namespace dyndag {

struct Lifetime {
  std::string tensor;
  std::int64_t size = 0;  // bytes, > 0
  int birth = 0;          // producing step
  int death = 0;          // last-use step, inclusive
};

struct Placement {
  Lifetime lifetime;
  std::int64_t offset = 0;
};

struct MemPlan {
  std::int64_t arena = 0;
  std::vector<Placement> placements;
  std::string strategy;  // "from-peak" | "best-fit" | "optimal-oracle"
};

// Lifetimes of intermediate (node-produced, non-constant) tensors under an
// execution order given as steps; a fused group passed as one step makes its
// internal tensors free (they never materialize). Tensors without a size
// entry are skipped. Graph outputs live to the last step.
std::vector<Lifetime> lifetimes(const std::vector<std::vector<std::string>>& steps,
                                const Graph& g,
                                const std::map<std::string, std::int64_t>& sizes);
std::vector<Lifetime> lifetimes(const std::vector<std::string>& order, const Graph& g,
                                const std::map<std::string, std::int64_t>& sizes);

// Sum of sizes live at the heaviest step — a lower bound on any arena.
std::int64_t peak_live_bytes(const std::vector<Lifetime>& lts);

MemPlan plan_from_peak(const std::vector<Lifetime>& lts, std::int64_t alignment = 64);
MemPlan plan_best_fit(const std::vector<Lifetime>& lts, std::int64_t alignment = 64);

// Branch-and-bound minimal arena; throws Error(Input) beyond `max_tensors`.
MemPlan plan_optimal(const std::vector<Lifetime>& lts, std::int64_t alignment = 1,
                     int max_tensors = 10);

}  // namespace dyndag
