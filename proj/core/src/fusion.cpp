// SPDX-License-Identifier: Apache-2.0

#include "dyndag/fusion.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace dyndag {

FuseKind fuse_kind(const Node& n) {
  if (n.opaque) return FuseKind::Barrier;
  const std::string& op = n.op;
  if (op == "Relu" || op == "Sigmoid" || op == "Cast") return FuseKind::Elementwise;
  if (op == "Add" || op == "Mul") return FuseKind::BroadcastElementwise;
  if (op == "ReduceSum" || op == "ReduceMean" || op == "Softmax")
    return FuseKind::Reduction;
  if (op == "Conv" || op == "MatMul" || op == "MaxPool" || op == "AveragePool")
    return FuseKind::Heavy;
  return FuseKind::Barrier;
}

std::string dim_status_name(DimStatus s) {
  switch (s) {
    case DimStatus::ResolvedEqual: return "resolved-equal";
    case DimStatus::ResolvedOne: return "resolved-one";
    case DimStatus::Unresolved: return "unresolved";
  }
  return "?";
}

namespace {

Fusibility infusible(const std::string& reason) {
  Fusibility f;
  f.kind = Fusibility::Kind::Infusible;
  f.reason = reason;
  return f;
}

// Dim of `s` aligned to position `i` of a rank-`rank` broadcast result;
// missing leading dims read as 1.
DimValue aligned_dim(const ShapeInfo& s, std::size_t i, std::size_t rank) {
  const std::size_t r = s.dims.size();
  if (i + r < rank) return DimValue::known(1);
  return s.dims[i + r - rank];
}

bool shape_fusion_ready(const ShapeInfo& s) {
  return s.is_ranked() && !s.has_nac_dim() && !s.has_undef_dim();
}

}  // namespace

Fusibility fusibility(const Graph& g, const Node& producer, const Node& consumer,
                      const RdpResult& rdp) {
  const FuseKind pk = fuse_kind(producer);
  const FuseKind ck = fuse_kind(consumer);
  if (pk == FuseKind::Barrier)
    return infusible("producer " + producer.id + " is not a fusible operator class");
  if (ck == FuseKind::Barrier)
    return infusible("consumer " + consumer.id + " is not a fusible operator class");
  if (ck == FuseKind::Heavy)
    return infusible("heavy operator " + consumer.id + " can only head a group");
  std::string edge_tensor;
  for (const auto& t : producer.outputs) {
    if (std::find(consumer.inputs.begin(), consumer.inputs.end(), t) !=
        consumer.inputs.end())
      edge_tensor = t;
  }
  if (edge_tensor.empty())
    return infusible(producer.id + " does not feed " + consumer.id);
  for (const auto& t : producer.outputs) {
    if (!shape_fusion_ready(rdp.shapes.at(t)))
      return infusible("tensor " + t + " has a statically unknowable shape");
  }
  const bool broadcasting = ck == FuseKind::BroadcastElementwise;
  for (const auto& t : consumer.inputs) {
    if (!shape_fusion_ready(rdp.shapes.at(t)))
      return infusible("tensor " + t + " has a statically unknowable shape");
  }
  for (const auto& t : consumer.outputs) {
    const ShapeInfo& s = rdp.shapes.at(t);
    // A broadcast consumer's output may carry nac dims where the two input
    // dims are symbolically unrelated; those are exactly the dims the
    // version count covers, so only require a known rank here.
    bool ok = broadcasting ? (s.is_ranked() && !s.has_undef_dim())
                           : shape_fusion_ready(s);
    if (!ok)
      return infusible("tensor " + t + " has a statically unknowable shape");
  }

  Fusibility f;
  f.kind = Fusibility::Kind::Fusible;
  if (ck != FuseKind::BroadcastElementwise) return f;

  // Pairwise broadcast: compare the producer-fed input against the other
  // input, dimension by dimension of the elementwise output.
  const ShapeInfo& out = rdp.shapes.at(consumer.outputs[0]);
  const ShapeInfo& a = rdp.shapes.at(edge_tensor);
  std::string other = consumer.inputs[0] == edge_tensor ? consumer.inputs[1]
                                                        : consumer.inputs[0];
  const ShapeInfo& b = rdp.shapes.at(other);
  int unresolved = 0;
  for (std::size_t i = 0; i < out.dims.size(); ++i) {
    DimValue da = aligned_dim(a, i, out.dims.size());
    DimValue db = aligned_dim(b, i, out.dims.size());
    DimResolution r;
    r.consumer = consumer.id;
    r.dim = static_cast<int>(i);
    if (da == db) {
      r.status = DimStatus::ResolvedEqual;
    } else if ((da.is_known() && da.known_value() == 1) ||
               (db.is_known() && db.known_value() == 1)) {
      r.status = DimStatus::ResolvedOne;
    } else {
      r.status = DimStatus::Unresolved;
      ++unresolved;
    }
    f.resolution.push_back(r);
  }
  f.versions = 1 << std::min(unresolved, 30);
  if (f.versions > 1) f.kind = Fusibility::Kind::MultiVersion;
  return f;
}

FusionPlan build_plan(const Graph& g, const RdpResult& rdp, int version_cap) {
  if (version_cap < 1)
    throw Error(Error::Kind::Input, "version cap must be positive");
  FusionPlan plan;
  plan.layers_before = static_cast<int>(g.nodes.size());

  const std::vector<int> topo = g.topo_order();
  std::vector<int> pos(g.nodes.size());
  for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = static_cast<int>(i);
  std::vector<std::vector<bool>> reach(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    reach[i] = g.reachable_from(static_cast<int>(i));
  const std::map<std::string, DType> dtypes = infer_dtypes(g);

  std::vector<bool> assigned(g.nodes.size(), false);
  for (int start : topo) {
    if (assigned[start]) continue;
    if (fuse_kind(g.nodes[start]) == FuseKind::Barrier) {
      plan.singletons.push_back(g.nodes[start].id);
      assigned[start] = true;
      continue;
    }
    std::vector<int> members{start};
    std::set<int> member_set{members.begin(), members.end()};
    std::vector<DimResolution> resolution;
    int versions = 1;
    bool open = fuse_kind(g.nodes[start]) != FuseKind::Reduction;
    while (open) {
      const int tail = members.back();
      // Candidate consumers of the tail, first-eligible by topo position.
      std::vector<int> cands;
      for (const auto& t : g.nodes[tail].outputs) {
        for (int c : g.consumers(t)) {
          if (!assigned[c] && !member_set.count(c)) cands.push_back(c);
        }
      }
      std::sort(cands.begin(), cands.end(),
                [&](int x, int y) { return pos[x] < pos[y]; });
      cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
      bool extended = false;
      for (int c : cands) {
        Fusibility f = fusibility(g, g.nodes[tail], g.nodes[c], rdp);
        if (f.kind == Fusibility::Kind::Infusible) continue;
        if (versions * f.versions > version_cap) continue;
        // Convexity: no outside node may sit on a members -> c path.
        bool convex = true;
        for (std::size_t m = 0; m < g.nodes.size() && convex; ++m) {
          if (member_set.count(static_cast<int>(m)) || static_cast<int>(m) == c)
            continue;
          if (!reach[m][c]) continue;
          for (int gm : members) {
            if (reach[gm][m]) {
              convex = false;
              break;
            }
          }
        }
        if (!convex) continue;
        members.push_back(c);
        member_set.insert(c);
        versions *= f.versions;
        resolution.insert(resolution.end(), f.resolution.begin(), f.resolution.end());
        if (fuse_kind(g.nodes[c]) == FuseKind::Reduction) open = false;
        extended = true;
        break;
      }
      if (!extended) break;
    }
    if (members.size() == 1) {
      plan.singletons.push_back(g.nodes[start].id);
      assigned[start] = true;
      continue;
    }
    FusionGroup grp;
    for (int m : members) {
      assigned[m] = true;
      grp.members.push_back(g.nodes[m].id);
    }
    grp.resolution = std::move(resolution);
    grp.versions = versions;
    std::set<std::string> produced;
    for (int m : members)
      for (const auto& t : g.nodes[m].outputs) produced.insert(t);
    std::set<std::string> in_set, out_set;
    grp.bytes_eliminated = SymExpr::literal(0);
    for (int m : members) {
      for (const auto& t : g.nodes[m].inputs) {
        if (!produced.count(t)) in_set.insert(t);
      }
    }
    for (const auto& t : produced) {
      bool escapes = g.is_graph_output(t);
      for (int c : g.consumers(t)) {
        if (!member_set.count(c)) escapes = true;
      }
      if (escapes) {
        out_set.insert(t);
      } else if (auto sz = tensor_bytes(rdp.shapes.at(t), dtypes.at(t))) {
        grp.bytes_eliminated = SymExpr::apply(SymOp::Add, grp.bytes_eliminated, *sz);
      }
    }
    grp.inputs.assign(in_set.begin(), in_set.end());
    grp.outputs.assign(out_set.begin(), out_set.end());
    plan.bytes_eliminated =
        SymExpr::apply(SymOp::Add, plan.bytes_eliminated, grp.bytes_eliminated);
    plan.groups.push_back(std::move(grp));
  }
  plan.layers_after =
      static_cast<int>(plan.groups.size() + plan.singletons.size());
  return plan;
}

}  // namespace dyndag
