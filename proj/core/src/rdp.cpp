// SPDX-License-Identifier: Apache-2.0

#include "dyndag/rdp.hpp"

#include <algorithm>

namespace dyndag {

namespace {

// Merge a freshly computed entry into the map, enforcing downward-only
// movement. A Known/Known disagreement is a static contradiction (typically
// forward analysis catching up with an over-eager backward fill).
DimValue absorb_dim(const Node& n, const std::string& tensor, const DimValue& prev,
                    const DimValue& next) {
  if (prev.is_undef()) return next;
  if (lattice_le(next, prev)) return next;
  if (prev.is_known() && next.is_known() && prev.known_value() != next.known_value())
    throw Error(Error::Kind::Analysis,
                "node " + n.id + ": contradictory dimensions for " + tensor + ": " +
                    prev.render() + " vs " + next.render());
  return meet(prev, next);
}

ShapeInfo absorb(const Node& n, const std::string& tensor, const ShapeInfo& prev,
                 const ShapeInfo& next) {
  if (prev.is_undef() || next.is_undef()) return lattice_le(next, prev) ? next : prev;
  if (lattice_le(next, prev)) return next;
  if (prev.is_nac()) return prev;
  if (next.is_nac() || prev.dims.size() != next.dims.size())
    throw Error(Error::Kind::Analysis,
                "node " + n.id + ": contradictory ranks for " + tensor + ": " +
                    prev.render() + " vs " + next.render());
  ShapeInfo r = next;
  for (std::size_t i = 0; i < r.dims.size(); ++i)
    r.dims[i] = absorb_dim(n, tensor, prev.dims[i], next.dims[i]);
  return r;
}

ValueInfo absorb(const Node& n, const std::string& tensor, const ValueInfo& prev,
                 const ValueInfo& next) {
  if (prev.is_undef() || next.is_undef()) return lattice_le(next, prev) ? next : prev;
  if (lattice_le(next, prev)) return next;
  return meet(prev, next);
}

struct Engine {
  const Graph& g;
  const RdpOptions& opts;
  AnalysisState st;
  SymbolTable symtab;
  // Memoized analysis-generated symbols for statically-unknowable dims
  // surfaced as values by Shape nodes: (node index, dim) -> name.
  std::map<std::pair<int, int>, std::string> generated;

  explicit Engine(const Graph& graph, const RdpOptions& o) : g(graph), opts(o) {}

  void seed() {
    for (const auto& s : g.symbols) symtab.declare(s, SymbolTable::Role::GraphInput);
    for (const auto& t : g.tensor_names()) {
      st.shapes[t] = ShapeInfo::undef();
      st.values[t] = ValueInfo::undef();
    }
    for (const auto& in : g.inputs) {
      st.shapes[in.name] = ShapeInfo::ranked(in.shape);
      st.values[in.name] = ValueInfo::nac();
    }
    for (const auto& c : g.constants) {
      std::vector<DimValue> dims;
      for (auto d : c.shape) dims.push_back(DimValue::known(d));
      st.shapes[c.name] = ShapeInfo::ranked(std::move(dims));
      if (c.int_data.has_value() && c.shape.size() <= 1 &&
          c.int_data->size() <= static_cast<std::size_t>(opts.value_cap)) {
        std::vector<DimValue> elems;
        for (auto v : *c.int_data) elems.push_back(DimValue::known(v));
        st.values[c.name] = ValueInfo::tracked(std::move(elems));
      } else {
        st.values[c.name] = ValueInfo::nac();
      }
    }
  }

  void store_shape(const Node& n, const std::string& t, const ShapeInfo& next) {
    ShapeInfo merged = absorb(n, t, st.shapes[t], next);
    if (merged != st.shapes[t]) {
      st.shapes[t] = merged;
      st.changed = true;
    }
  }

  void store_value(const Node& n, const std::string& t, const ValueInfo& next) {
    ValueInfo merged = absorb(n, t, st.values[t], next);
    if (merged != st.values[t]) {
      st.values[t] = merged;
      st.changed = true;
    }
  }

  // For a Shape node, any statically-unknowable dim of the input becomes a
  // fresh named unknown in the value vector, so downstream consumers of the
  // same shape tensor stay mutually consistent.
  ValueInfo symbolize(int node_idx, const ValueInfo& v) {
    if (!v.is_tracked()) return v;
    ValueInfo out = v;
    for (std::size_t i = 0; i < out.elems.size(); ++i) {
      if (!out.elems[i].is_nac()) continue;
      auto key = std::make_pair(node_idx, static_cast<int>(i));
      auto it = generated.find(key);
      if (it == generated.end()) {
        std::string name = symtab.fresh(g.nodes[node_idx].id + "_" + std::to_string(i));
        it = generated.emplace(key, name).first;
      }
      out.elems[i] = DimValue::sym(it->second);
    }
    return out;
  }

  void visit(int ni) {
    const Node& n = g.nodes[ni];
    std::vector<ShapeInfo> in_shapes;
    std::vector<ValueInfo> in_values;
    for (const auto& t : n.inputs) {
      in_shapes.push_back(st.shapes.at(t));
      in_values.push_back(st.values.at(t));
    }
    TransferResult r = forward_transfer(g, n, in_shapes, in_values, opts.value_cap);
    if (n.op == "Shape") {
      for (auto& v : r.values) v = symbolize(ni, v);
    }
    for (std::size_t o = 0; o < n.outputs.size(); ++o) {
      store_shape(n, n.outputs[o], r.shapes[o]);
      store_value(n, n.outputs[o], r.values[o]);
    }
    // Backward refinement, skipped for inputs that already have no Undef
    // left to fill.
    bool any_undef = false;
    for (const auto& t : n.inputs) {
      if (st.shapes.at(t).has_undef_dim()) any_undef = true;
    }
    if (!any_undef) return;
    std::vector<ShapeInfo> out_shapes;
    std::vector<ValueInfo> out_values;
    for (const auto& t : n.outputs) {
      out_shapes.push_back(st.shapes.at(t));
      out_values.push_back(st.values.at(t));
    }
    std::vector<ShapeInfo> refined = backward_shape(g, n, out_shapes, in_shapes);
    refined = backward_value(g, n, out_values, refined);
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (refined[i] != in_shapes[i]) store_shape(n, n.inputs[i], refined[i]);
    }
  }

  RdpResult run() {
    seed();
    std::vector<int> order = opts.sweep_order.empty() ? g.topo_order() : opts.sweep_order;
    const int bound = 10 * std::max<int>(1, static_cast<int>(g.nodes.size()));
    do {
      st.changed = false;
      for (int ni : order) visit(ni);
      ++st.iterations;
      if (st.iterations > bound)
        throw Error(Error::Kind::Internal,
                    "shape propagation failed to converge within " +
                        std::to_string(bound) + " sweeps");
    } while (st.changed);

    RdpResult res;
    res.shapes = st.shapes;
    res.values = st.values;
    res.symtab = symtab;
    res.iterations = st.iterations;
    for (const auto& n : g.nodes) {
      res.node_class[n.id] = classify(g, n);
      for (const auto& t : n.outputs) {
        if (st.shapes.at(t).has_nac_dim()) res.nac_nodes.insert(n.id);
      }
    }
    return res;
  }
};

}  // namespace

RdpResult run_rdp(const Graph& g, const RdpOptions& opts) {
  return Engine(g, opts).run();
}

ConcreteShapes substitute(const RdpResult& result,
                          const std::map<std::string, std::int64_t>& env) {
  ConcreteShapes out;
  for (const auto& [tensor, info] : result.shapes) {
    if (info.is_undef()) {
      out.unresolved.push_back(tensor);
      continue;
    }
    if (info.is_nac()) {
      out.dynamic_only.push_back(tensor);
      continue;
    }
    std::vector<std::int64_t> dims;
    bool dynamic = false;
    for (const auto& d : info.dims) {
      if (d.is_undef()) {
        out.unresolved.push_back(tensor);
        dynamic = true;
        break;
      }
      if (d.is_nac()) {
        dynamic = true;
        break;
      }
      if (d.is_known()) {
        dims.push_back(d.known_value());
        continue;
      }
      bool missing_generated = false;
      for (const auto& s : d.expr().symbols()) {
        if (env.count(s)) continue;
        if (!s.empty() && s[0] == '$') {
          missing_generated = true;
        } else {
          throw Error(Error::Kind::Input, "unbound symbol '" + s + "' for " + tensor);
        }
      }
      if (missing_generated) {
        dynamic = true;
        break;
      }
      dims.push_back(d.expr().evaluate(env));
    }
    if (dynamic) {
      if (out.unresolved.empty() || out.unresolved.back() != tensor)
        out.dynamic_only.push_back(tensor);
      continue;
    }
    out.shapes.emplace(tensor, std::move(dims));
  }
  return out;
}

std::optional<SymExpr> tensor_bytes(const ShapeInfo& s, DType dtype) {
  if (!s.is_ranked() || s.has_nac_dim() || s.has_undef_dim()) return std::nullopt;
  SymExpr bytes = SymExpr::literal(dtype_size(dtype));
  for (const auto& d : s.dims) bytes = SymExpr::apply(SymOp::Mul, bytes, d.as_expr());
  return bytes;
}

}  // namespace dyndag
