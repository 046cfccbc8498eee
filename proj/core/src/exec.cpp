// SPDX-License-Identifier: Apache-2.0

#include "dyndag/exec.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace dyndag {

std::string category_name(SubgraphCategory c) {
  switch (c) {
    case SubgraphCategory::AllKnown: return "all-known";
    case SubgraphCategory::MixedConst: return "mixed-const";
    case SubgraphCategory::NacBounded: return "nac-bounded";
  }
  return "?";
}

std::string method_name(OrderMethod m) {
  switch (m) {
    case OrderMethod::Exhaustive: return "exhaustive";
    case OrderMethod::SymbolicCompare: return "symbolic-compare";
    case OrderMethod::Heuristic: return "heuristic";
  }
  return "?";
}

namespace {

struct Find {
  std::vector<int> parent;
  explicit Find(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int root(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(int a, int b) { parent[root(a)] = root(b); }
};

// Liveness bookkeeping for one subgraph: which member-produced tensors exist,
// their sizes (as whatever numeric type), and their consumer sets.
template <typename Size>
struct Scope {
  const Graph& g;
  std::vector<int> members;
  std::map<int, int> slot;  // node index -> member position

  struct Tensor {
    Size size{};
    int producer;                 // member position
    std::uint32_t consumer_mask;  // member positions consuming it
    bool to_end;                  // escapes the subgraph: lives to the last step
  };
  std::vector<Tensor> tensors;
  std::vector<std::uint32_t> pred_mask;           // per member position
  std::vector<std::vector<int>> produced;         // member position -> tensor ids
  std::vector<std::vector<int>> consumed;         // member position -> tensor ids

  Scope(const Graph& graph, const std::vector<int>& m,
        const std::map<std::string, Size>& sizes)
      : g(graph), members(m) {
    for (std::size_t i = 0; i < members.size(); ++i)
      slot[members[i]] = static_cast<int>(i);
    pred_mask.assign(members.size(), 0);
    produced.assign(members.size(), {});
    consumed.assign(members.size(), {});
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Node& n = g.nodes[members[i]];
      for (const auto& t : n.inputs) {
        const Producer& p = g.producer(t);
        if (p.kind != Producer::Kind::NodeOutput) continue;
        auto it = slot.find(p.index);
        if (it != slot.end()) pred_mask[i] |= 1u << it->second;
      }
      for (const auto& t : n.outputs) {
        Tensor tn;
        tn.producer = static_cast<int>(i);
        tn.consumer_mask = 0;
        tn.to_end = g.is_graph_output(t);
        for (int c : g.consumers(t)) {
          auto it = slot.find(c);
          if (it != slot.end()) {
            tn.consumer_mask |= 1u << it->second;
          } else {
            tn.to_end = true;
          }
        }
        auto sit = sizes.find(t);
        if (sit != sizes.end()) tn.size = sit->second;
        produced[i].push_back(static_cast<int>(tensors.size()));
        tensors.push_back(tn);
      }
    }
    // Consumed-tensor lists need all tensor ids assigned, hence second pass.
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Node& n = g.nodes[members[i]];
      for (const auto& t : n.inputs) {
        const Producer& p = g.producer(t);
        if (p.kind != Producer::Kind::NodeOutput) continue;
        auto it = slot.find(p.index);
        if (it == slot.end()) continue;
        consumed[i].push_back(produced[it->second][p.output_pos]);
      }
    }
  }

  // Total live bytes during the step that executes member `v`, after which
  // the executed set is `mask` (v included).
  template <typename Acc, typename Plus>
  Acc live_at(std::uint32_t mask, int v, Acc zero, Plus plus) const {
    Acc total = zero;
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
      const Tensor& t = tensors[ti];
      if (!(mask & (1u << t.producer))) continue;
      const bool live = t.to_end || (t.consumer_mask & ~mask) != 0 ||
                        t.producer == v || (t.consumer_mask & (1u << v)) != 0;
      if (live) total = plus(total, t.size);
    }
    return total;
  }
};

std::vector<std::string> id_seq(const Graph& g, const std::vector<int>& order) {
  std::vector<std::string> ids;
  for (int n : order) ids.push_back(g.nodes[n].id);
  return ids;
}

// -1: a provably <= b with a < b possible; 0: provably equal; +1: b < a;
// 2: indeterminate.
int sym_compare(const SymExpr& a, const SymExpr& b) {
  SymExpr d = SymExpr::apply(SymOp::Sub, a, b);
  if (d.is_literal()) return d.literal_value() == 0 ? 0 : (d.literal_value() < 0 ? -1 : 1);
  Sign s = d.sign();
  if (s == Sign::AlwaysNonPositive) return -1;
  if (s == Sign::AlwaysNonNegative) return 1;
  return 2;
}

std::int64_t probe_eval(const SymExpr& e, std::int64_t probe) {
  std::map<std::string, std::int64_t> env;
  for (const auto& s : e.symbols()) env[s] = probe;
  return e.evaluate(env);
}

}  // namespace

OrderResult order_exhaustive(const Graph& g, const std::vector<int>& members,
                             const std::map<std::string, std::int64_t>& sizes,
                             int cap) {
  if (static_cast<int>(members.size()) > cap)
    throw Error(Error::Kind::Input,
                "subgraph of " + std::to_string(members.size()) +
                    " nodes exceeds the exhaustive-search cap " + std::to_string(cap));
  Scope<std::int64_t> sc(g, members, sizes);
  const std::uint32_t full = members.size() == 32 ? 0xffffffffu
                                                  : (1u << members.size()) - 1;
  struct State {
    std::int64_t peak = -1;  // -1: unreached
    std::vector<int> order;
  };
  std::vector<State> best(full + 1);
  best[0].peak = 0;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    if (best[mask].peak < 0) continue;
    for (std::size_t v = 0; v < members.size(); ++v) {
      if (mask & (1u << v)) continue;
      if ((sc.pred_mask[v] & mask) != sc.pred_mask[v]) continue;
      const std::uint32_t next = mask | (1u << v);
      std::int64_t step = sc.live_at(next, static_cast<int>(v), std::int64_t{0},
                                     [](std::int64_t a, std::int64_t b) { return a + b; });
      std::int64_t peak = std::max(best[mask].peak, step);
      std::vector<int> order = best[mask].order;
      order.push_back(members[v]);
      State& tgt = best[next];
      bool take = tgt.peak < 0 || peak < tgt.peak;
      if (!take && peak == tgt.peak)
        take = id_seq(g, order) < id_seq(g, tgt.order);
      if (take) {
        tgt.peak = peak;
        tgt.order = std::move(order);
      }
      if (mask == full) break;
    }
    if (mask == full) break;
  }
  if (best[full].peak < 0)
    throw Error(Error::Kind::Internal, "no topological order found for subgraph");
  return {best[full].order, best[full].peak};
}

SymOrderResult order_symbolic(const Graph& g, const std::vector<int>& members,
                              const std::map<std::string, SymExpr>& sizes,
                              int cap, std::int64_t probe) {
  if (static_cast<int>(members.size()) > cap)
    throw Error(Error::Kind::Input,
                "subgraph of " + std::to_string(members.size()) +
                    " nodes exceeds the exhaustive-search cap " + std::to_string(cap));
  Scope<SymExpr> sc(g, members, sizes);
  const std::uint32_t full = members.size() == 32 ? 0xffffffffu
                                                  : (1u << members.size()) - 1;
  struct State {
    bool reached = false;
    SymExpr peak;
    std::vector<int> order;
  };
  std::vector<State> best(full + 1);
  best[0].reached = true;
  best[0].peak = SymExpr::literal(0);
  bool determinate = true;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    if (!best[mask].reached) continue;
    for (std::size_t v = 0; v < members.size(); ++v) {
      if (mask & (1u << v)) continue;
      if ((sc.pred_mask[v] & mask) != sc.pred_mask[v]) continue;
      const std::uint32_t next = mask | (1u << v);
      SymExpr step = sc.live_at(next, static_cast<int>(v), SymExpr::literal(0),
                                [](const SymExpr& a, const SymExpr& b) {
                                  return SymExpr::apply(SymOp::Add, a, b);
                                });
      SymExpr peak = SymExpr::apply(SymOp::Max, best[mask].peak, step);
      std::vector<int> order = best[mask].order;
      order.push_back(members[v]);
      State& tgt = best[next];
      bool take;
      if (!tgt.reached) {
        take = true;
      } else {
        int c = sym_compare(peak, tgt.peak);
        if (c == 2) {
          determinate = false;
          std::int64_t a = probe_eval(peak, probe);
          std::int64_t b = probe_eval(tgt.peak, probe);
          c = a == b ? 0 : (a < b ? -1 : 1);
        }
        take = c < 0 || (c == 0 && id_seq(g, order) < id_seq(g, tgt.order));
      }
      if (take) {
        tgt.reached = true;
        tgt.peak = std::move(peak);
        tgt.order = std::move(order);
      }
      if (mask == full) break;
    }
    if (mask == full) break;
  }
  if (!best[full].reached)
    throw Error(Error::Kind::Internal, "no topological order found for subgraph");
  return {best[full].order, best[full].peak, determinate};
}

std::vector<int> order_heuristic(const Graph& g, const std::vector<int>& members,
                                 const std::map<std::string, std::int64_t>& probe_sizes) {
  // Beam search over partial schedules: each state keeps its done set, the
  // live total after the last step, and the peak seen so far. Width is small
  // and fixed, so the cost stays near the plain greedy while recovering most
  // of the orderings the one-step greedy misses.
  constexpr std::size_t kBeamWidth = 8;
  std::map<int, int> slot;
  for (std::size_t i = 0; i < members.size(); ++i) slot[members[i]] = static_cast<int>(i);
  std::vector<std::set<int>> preds(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (const auto& t : g.nodes[members[i]].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind == Producer::Kind::NodeOutput && slot.count(p.index))
        preds[i].insert(slot[p.index]);
    }
  }
  auto size_of = [&](const std::string& t) -> std::int64_t {
    auto s = probe_sizes.find(t);
    return s == probe_sizes.end() ? 0 : s->second;
  };
  // Live total after the steps in `d`: member outputs that escape the
  // subgraph or still have an unexecuted consumer.
  auto live_after = [&](const std::vector<bool>& d) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!d[i]) continue;
      for (const auto& t : g.nodes[members[i]].outputs) {
        bool live = g.is_graph_output(t);
        for (int c : g.consumers(t)) {
          auto it = slot.find(c);
          if (it == slot.end() || !d[it->second]) live = true;
        }
        if (live) total += size_of(t);
      }
    }
    return total;
  };
  // Live total during the step that executes member v (v already in `d`):
  // tensors consumed or produced at v count even if they die there.
  auto live_during = [&](const std::vector<bool>& d, std::size_t v) {
    const Node& node = g.nodes[members[v]];
    std::set<std::string> touched(node.inputs.begin(), node.inputs.end());
    touched.insert(node.outputs.begin(), node.outputs.end());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!d[i]) continue;
      for (const auto& t : g.nodes[members[i]].outputs) {
        bool live = g.is_graph_output(t) || touched.count(t) > 0;
        for (int c : g.consumers(t)) {
          auto it = slot.find(c);
          if (it == slot.end() || !d[it->second]) live = true;
        }
        if (live) total += size_of(t);
      }
    }
    return total;
  };

  struct State {
    std::vector<bool> done;
    std::int64_t live = 0;
    std::int64_t peak = 0;
    std::vector<int> order;  // slots, in execution order
  };
  std::vector<State> beam{State{std::vector<bool>(members.size(), false), 0, 0, {}}};
  for (std::size_t step = 0; step < members.size(); ++step) {
    std::vector<State> next;
    for (const State& st : beam) {
      for (std::size_t v = 0; v < members.size(); ++v) {
        if (st.done[v]) continue;
        bool ready = true;
        for (int p : preds[v])
          if (!st.done[p]) ready = false;
        if (!ready) continue;
        State nx = st;
        nx.done[v] = true;
        nx.order.push_back(static_cast<int>(v));
        nx.peak = std::max(st.peak, live_during(nx.done, v));
        nx.live = live_after(nx.done);
        next.push_back(std::move(nx));
      }
    }
    if (next.empty())
      throw Error(Error::Kind::Internal, "subgraph order: no ready node");
    std::sort(next.begin(), next.end(), [](const State& a, const State& b) {
      if (a.peak != b.peak) return a.peak < b.peak;
      if (a.live != b.live) return a.live < b.live;
      return a.order < b.order;
    });
    // Keep at most one state per done set (the best-ranked one), then trim.
    std::vector<State> pruned;
    std::set<std::vector<bool>> seen;
    for (State& st : next) {
      if (pruned.size() >= kBeamWidth) break;
      if (seen.insert(st.done).second) pruned.push_back(std::move(st));
    }
    beam = std::move(pruned);
  }
  std::vector<int> order;
  for (int v : beam.front().order) order.push_back(members[v]);
  return order;
}

std::vector<std::vector<int>> partition(const Graph& g, const RdpResult& rdp) {
  const int n = static_cast<int>(g.nodes.size());
  if (n == 0) return {};
  const std::vector<int> topo = g.topo_order();
  // A node is a boundary sink when it *introduces* a statically unknowable
  // output dim — its own dynamism (value-dependent or opaque), not a nac dim
  // merely propagated from an upstream boundary. Downstream shapes become
  // concrete at runtime once the sink has executed, so the region between two
  // sinks plans as one unit.
  std::vector<bool> boundary(n, false);
  for (int i = 0; i < n; ++i) {
    bool nac_out = false;
    for (const auto& t : g.nodes[i].outputs) {
      if (rdp.shapes.at(t).has_nac_dim()) nac_out = true;
    }
    if (!nac_out) continue;
    DynClass cls = rdp.node_class.at(g.nodes[i].id);
    bool intrinsic = cls == DynClass::EDO || cls == DynClass::ISVDOS;
    bool nac_in = false;
    for (const auto& t : g.nodes[i].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind == Producer::Kind::NodeOutput && rdp.shapes.at(t).has_nac_dim())
        nac_in = true;
    }
    boundary[i] = intrinsic || !nac_in;
  }
  // Level = number of boundary sinks strictly upstream along the worst path.
  std::vector<int> level(n, 0);
  for (int i : topo) {
    for (const auto& t : g.nodes[i].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind != Producer::Kind::NodeOutput) continue;
      level[i] = std::max(level[i], level[p.index] + (boundary[p.index] ? 1 : 0));
    }
  }
  Find uf(n);
  // Connectivity within a level: direct edges and shared input tensors.
  for (int i = 0; i < n; ++i) {
    for (const auto& t : g.nodes[i].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind == Producer::Kind::NodeOutput && level[p.index] == level[i])
        uf.join(p.index, i);
      const auto& cs = g.consumers(t);
      for (int c : cs) {
        if (level[c] == level[i]) uf.join(c, i);
      }
    }
  }
  // Keep every Switch region within one subgraph.
  std::vector<std::vector<bool>> reach(n);
  for (int i = 0; i < n; ++i) reach[i] = g.reachable_from(i);
  for (int s = 0; s < n; ++s) {
    if (g.nodes[s].op != "Switch") continue;
    int comb = -1;
    for (int c : topo) {
      if (g.nodes[c].op == "Combine" && reach[s][c]) {
        comb = c;
        break;
      }
    }
    if (comb < 0) continue;
    uf.join(s, comb);
    for (int m = 0; m < n; ++m) {
      if (reach[s][m] && reach[m][comb]) uf.join(s, m);
    }
  }
  // Contract any cycles the region merging may have introduced between
  // groups, so the group quotient stays a DAG: Kahn over the quotient, then
  // join whatever mutually-reachable leftovers remain.
  bool merged = true;
  while (merged) {
    merged = false;
    std::map<int, std::set<int>> qsucc;
    std::map<int, int> indeg;
    for (int i = 0; i < n; ++i) indeg[uf.root(i)] = 0;
    for (int i = 0; i < n; ++i) {
      for (const auto& t : g.nodes[i].inputs) {
        const Producer& p = g.producer(t);
        if (p.kind != Producer::Kind::NodeOutput) continue;
        int a = uf.root(p.index), b = uf.root(i);
        if (a != b && qsucc[a].insert(b).second) ++indeg[b];
      }
    }
    std::vector<int> ready;
    for (const auto& [r, d] : indeg) {
      if (d == 0) ready.push_back(r);
    }
    std::size_t removed = 0;
    while (!ready.empty()) {
      int r = ready.back();
      ready.pop_back();
      ++removed;
      for (int s : qsucc[r]) {
        if (--indeg[s] == 0) ready.push_back(s);
      }
    }
    if (removed == indeg.size()) break;
    // Leftover groups form cycles; join one mutually-reachable pair.
    std::vector<int> left;
    for (const auto& [r, d] : indeg) {
      if (d > 0) left.push_back(r);
    }
    auto group_reaches = [&](int ra, int rb) {
      for (int x = 0; x < n; ++x) {
        if (uf.root(x) != ra) continue;
        for (int y = 0; y < n; ++y) {
          if (uf.root(y) == rb && reach[x][y]) return true;
        }
      }
      return false;
    };
    for (std::size_t a = 0; a < left.size() && !merged; ++a) {
      for (std::size_t b = a + 1; b < left.size() && !merged; ++b) {
        if (group_reaches(left[a], left[b]) && group_reaches(left[b], left[a])) {
          uf.join(left[a], left[b]);
          merged = true;
        }
      }
    }
    if (!merged)
      throw Error(Error::Kind::Internal, "partition: unresolved group cycle");
  }
  // Emit groups in a topological order of the quotient DAG, ties broken by
  // the earliest member position.
  std::map<int, std::vector<int>> groups;
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[topo[i]] = i;
  for (int i : topo) groups[uf.root(i)].push_back(i);
  std::map<int, std::set<int>> qsucc;
  std::map<int, int> indeg;
  for (const auto& [r, _] : groups) indeg[r] = 0;
  for (int i = 0; i < n; ++i) {
    for (const auto& t : g.nodes[i].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind != Producer::Kind::NodeOutput) continue;
      int a = uf.root(p.index), b = uf.root(i);
      if (a != b && qsucc[a].insert(b).second) ++indeg[b];
    }
  }
  auto earliest = [&](int r) { return pos[groups[r].front()]; };
  std::set<std::pair<int, int>> ready;  // (earliest member pos, root)
  for (const auto& [r, d] : indeg) {
    if (d == 0) ready.insert({earliest(r), r});
  }
  std::vector<std::vector<int>> out;
  while (!ready.empty()) {
    int r = ready.begin()->second;
    ready.erase(ready.begin());
    out.push_back(groups[r]);
    for (int s : qsucc[r]) {
      if (--indeg[s] == 0) ready.insert({earliest(s), s});
    }
  }
  return out;
}

ExecPlan build_exec_plan(const Graph& g, const RdpResult& rdp,
                         const ExecOptions& opts) {
  ExecPlan plan;
  const std::map<std::string, DType> dtypes = infer_dtypes(g);
  std::map<std::string, SymExpr> sym_sizes;
  std::map<std::string, std::int64_t> known_sizes;
  std::map<std::string, std::int64_t> probe_sizes;
  for (const auto& [t, sh] : rdp.shapes) {
    auto b = tensor_bytes(sh, dtypes.count(t) ? dtypes.at(t) : DType::F32);
    if (!b) continue;
    sym_sizes.emplace(t, *b);
    if (b->is_literal()) known_sizes[t] = b->literal_value();
    probe_sizes[t] = probe_eval(*b, opts.probe);
  }

  std::set<std::string> boundary;
  int next_id = 0;
  for (const auto& members : partition(g, rdp)) {
    SubgraphPlan sp;
    sp.id = next_id++;
    sp.members = id_seq(g, members);
    bool any_nac = false, any_sym = false;
    for (int m : members) {
      for (const auto& lst : {g.nodes[m].inputs, g.nodes[m].outputs}) {
        for (const auto& t : lst) {
          const ShapeInfo& sh = rdp.shapes.at(t);
          if (sh.has_nac_dim()) any_nac = true;
          for (const auto& d : sh.dims) {
            if (d.is_sym()) any_sym = true;
          }
        }
      }
      for (const auto& t : g.nodes[m].outputs) {
        if (rdp.shapes.at(t).has_nac_dim()) boundary.insert(t);
      }
    }
    sp.category = any_nac ? SubgraphCategory::NacBounded
                          : (any_sym ? SubgraphCategory::MixedConst
                                     : SubgraphCategory::AllKnown);
    std::vector<int> order;
    const bool fits = static_cast<int>(members.size()) <= opts.exhaustive_cap;
    if (sp.category == SubgraphCategory::AllKnown && fits) {
      OrderResult r = order_exhaustive(g, members, known_sizes, opts.exhaustive_cap);
      order = r.order;
      sp.peak = SymExpr::literal(r.peak);
      sp.method = OrderMethod::Exhaustive;
    } else if (sp.category == SubgraphCategory::MixedConst && fits) {
      SymOrderResult r =
          order_symbolic(g, members, sym_sizes, opts.exhaustive_cap, opts.probe);
      order = r.order;
      sp.peak = r.peak;
      sp.method = r.determinate ? OrderMethod::SymbolicCompare : OrderMethod::Heuristic;
    } else {
      order = order_heuristic(g, members, probe_sizes);
      sp.method = OrderMethod::Heuristic;
      if (sp.category == SubgraphCategory::AllKnown) {
        // Cap exceeded: still report the greedy order's concrete peak.
        Scope<std::int64_t> sc(g, order, known_sizes);
        std::int64_t peak = 0;
        std::uint32_t mask = 0;
        if (order.size() <= 32) {
          for (std::size_t i = 0; i < order.size(); ++i) {
            mask |= 1u << i;
            peak = std::max(
                peak, sc.live_at(mask, static_cast<int>(i), std::int64_t{0},
                                 [](std::int64_t a, std::int64_t b) { return a + b; }));
          }
          sp.peak = SymExpr::literal(peak);
        }
      }
    }
    sp.order = id_seq(g, order);
    for (const auto& id : sp.order) plan.global_order.push_back(id);
    plan.subgraphs.push_back(std::move(sp));
  }
  plan.boundary_tensors.assign(boundary.begin(), boundary.end());
  return plan;
}

}  // namespace dyndag
