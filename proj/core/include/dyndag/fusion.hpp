// SPDX-License-Identifier: Apache-2.0
//
// Operator fusion planning on top of shape-analysis facts: decide which
// producer/consumer chains can be compiled as one unit, resolve broadcast
// ambiguity per dimension, and count the code versions each group needs.

#pragma once

#include <string>
#include <vector>

#include "dyndag/rdp.hpp"

namespace dyndag {

enum class FuseKind { Elementwise, BroadcastElementwise, Reduction, Heavy, Barrier };

FuseKind fuse_kind(const Node& n);

enum class DimStatus { ResolvedEqual, ResolvedOne, Unresolved };

std::string dim_status_name(DimStatus s);

// One broadcast-ambiguity record: output dimension `dim` at the elementwise
// node `consumer`.
struct DimResolution {
  std::string consumer;
  int dim = 0;
  DimStatus status = DimStatus::Unresolved;
};

struct Fusibility {
  enum class Kind { Fusible, MultiVersion, Infusible };
  Kind kind = Kind::Infusible;
  int versions = 1;
  std::vector<DimResolution> resolution;
  std::string reason;  // set when infusible
};

// Can `consumer` be appended to a group ending in `producer`? Pure
// pairwise legality + broadcast resolution; group-level rules (convexity,
// version cap, epilogue position) live in build_plan.
Fusibility fusibility(const Graph& g, const Node& producer, const Node& consumer,
                      const RdpResult& rdp);

struct FusionGroup {
  std::vector<std::string> members;  // node ids in execution order
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<DimResolution> resolution;
  int versions = 1;
  SymExpr bytes_eliminated;  // sizes of tensors made group-internal
};

struct FusionPlan {
  std::vector<FusionGroup> groups;
  std::vector<std::string> singletons;  // node ids left unfused
  int layers_before = 0;
  int layers_after = 0;
  SymExpr bytes_eliminated;
};

FusionPlan build_plan(const Graph& g, const RdpResult& rdp, int version_cap = 4);

}  // namespace dyndag
