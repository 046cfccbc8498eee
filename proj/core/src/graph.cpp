// SPDX-License-Identifier: Apache-2.0

#include "dyndag/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>

#include "dyndag/ops.hpp"

namespace dyndag {

using json = nlohmann::ordered_json;

int dtype_size(DType t) {
  switch (t) {
    case DType::F32: return 4;
    case DType::F16: return 2;
    case DType::I64: return 8;
    case DType::I32: return 4;
    case DType::Bool: return 1;
  }
  return 4;
}

DType dtype_parse(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f16") return DType::F16;
  if (s == "i64") return DType::I64;
  if (s == "i32") return DType::I32;
  if (s == "bool") return DType::Bool;
  throw Error(Error::Kind::Input, "unknown dtype: " + s);
}

std::string dtype_name(DType t) {
  switch (t) {
    case DType::F32: return "f32";
    case DType::F16: return "f16";
    case DType::I64: return "i64";
    case DType::I32: return "i32";
    case DType::Bool: return "bool";
  }
  return "f32";
}

std::int64_t Node::attr_int(const std::string& key, std::int64_t fallback) const {
  if (!attrs.contains(key)) return fallback;
  return attrs.at(key).get<std::int64_t>();
}

std::vector<std::int64_t> Node::attr_ints(const std::string& key) const {
  if (!attrs.contains(key)) return {};
  return attrs.at(key).get<std::vector<std::int64_t>>();
}

Graph Graph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Input, "cannot open graph file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(Error::Kind::Input, std::string("JSON parse error: ") + e.what());
  }
  return from_json(j);
}

namespace {

DimValue dim_from_json(const json& d, const std::set<std::string>& declared) {
  DimValue v;
  if (d.is_number_integer()) {
    v = DimValue::known(d.get<std::int64_t>());
  } else if (d.is_string()) {
    v = DimValue::parse(d.get<std::string>());
  } else {
    throw Error(Error::Kind::Input, "shape entries must be int or string");
  }
  if (v.is_known() && v.known_value() <= 0)
    throw Error(Error::Kind::Input, "declared dimensions must be positive");
  if (v.is_sym()) {
    for (const auto& s : v.expr().symbols()) {
      if (declared.count(s) == 0)
        throw Error(Error::Kind::Input, "undeclared symbol in shape: " + s);
    }
  }
  return v;
}

}  // namespace

Graph Graph::from_json(const json& j) {
  Graph g;
  try {
    g.name = j.value("name", "");
    g.symbols = j.value("symbols", std::vector<std::string>{});
    std::set<std::string> declared(g.symbols.begin(), g.symbols.end());
    if (declared.size() != g.symbols.size())
      throw Error(Error::Kind::Input, "duplicate symbol declaration");
    for (const auto& ji : j.value("inputs", json::array())) {
      InputDecl in;
      in.name = ji.at("name").get<std::string>();
      in.dtype = dtype_parse(ji.at("dtype").get<std::string>());
      for (const auto& d : ji.at("shape")) in.shape.push_back(dim_from_json(d, declared));
      g.inputs.push_back(std::move(in));
    }
    for (const auto& jc : j.value("constants", json::array())) {
      ConstDecl c;
      c.name = jc.at("name").get<std::string>();
      c.dtype = dtype_parse(jc.at("dtype").get<std::string>());
      c.shape = jc.at("shape").get<std::vector<std::int64_t>>();
      for (auto d : c.shape) {
        if (d <= 0) throw Error(Error::Kind::Input, "constant dimensions must be positive");
      }
      if (jc.contains("int_data"))
        c.int_data = jc.at("int_data").get<std::vector<std::int64_t>>();
      g.constants.push_back(std::move(c));
    }
    for (const auto& jn : j.value("nodes", json::array())) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      n.op = jn.at("op").get<std::string>();
      n.inputs = jn.value("inputs", std::vector<std::string>{});
      n.outputs = jn.at("outputs").get<std::vector<std::string>>();
      n.attrs = jn.value("attrs", json::object());
      n.opaque = jn.value("opaque", false);
      g.nodes.push_back(std::move(n));
    }
    g.outputs = j.value("outputs", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Input, std::string("graph schema error: ") + e.what());
  }
  g.validate();
  return g;
}

json Graph::to_json() const {
  json j;
  j["name"] = name;
  j["symbols"] = symbols;
  json jin = json::array();
  for (const auto& in : inputs) {
    json ji;
    ji["name"] = in.name;
    ji["dtype"] = dtype_name(in.dtype);
    json sh = json::array();
    for (const auto& d : in.shape) {
      if (d.is_known()) {
        sh.push_back(d.known_value());
      } else {
        sh.push_back(d.render());
      }
    }
    ji["shape"] = sh;
    jin.push_back(ji);
  }
  j["inputs"] = jin;
  json jc = json::array();
  for (const auto& c : constants) {
    json e;
    e["name"] = c.name;
    e["dtype"] = dtype_name(c.dtype);
    e["shape"] = c.shape;
    if (c.int_data) e["int_data"] = *c.int_data;
    jc.push_back(e);
  }
  j["constants"] = jc;
  json jn = json::array();
  for (const auto& n : nodes) {
    json e;
    e["id"] = n.id;
    e["op"] = n.op;
    e["inputs"] = n.inputs;
    e["outputs"] = n.outputs;
    e["attrs"] = n.attrs;
    if (n.opaque) e["opaque"] = true;
    jn.push_back(e);
  }
  j["nodes"] = jn;
  j["outputs"] = outputs;
  return j;
}

void Graph::index() {
  producers_.clear();
  consumers_.clear();
  auto add_producer = [&](const std::string& t, Producer p) {
    auto [it, inserted] = producers_.emplace(t, p);
    if (!inserted)
      throw Error(Error::Kind::Input, "tensor has more than one producer: " + t);
  };
  for (int i = 0; i < static_cast<int>(inputs.size()); ++i)
    add_producer(inputs[i].name, {Producer::Kind::Input, i, 0});
  for (int i = 0; i < static_cast<int>(constants.size()); ++i)
    add_producer(constants[i].name, {Producer::Kind::Constant, i, 0});
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    for (int o = 0; o < static_cast<int>(nodes[i].outputs.size()); ++o)
      add_producer(nodes[i].outputs[o], {Producer::Kind::NodeOutput, i, o});
  }
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    for (const auto& t : nodes[i].inputs) consumers_[t].push_back(i);
  }
}

void Graph::validate() {
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second)
      throw Error(Error::Kind::Input, "duplicate node id: " + n.id);
  }
  index();
  for (const auto& n : nodes) {
    for (const auto& t : n.inputs) {
      if (producers_.count(t) == 0)
        throw Error(Error::Kind::Input, "node " + n.id + " reads undefined tensor: " + t);
    }
    if (!n.opaque) {
      const OpSpec* spec = find_op(n.op);
      if (spec == nullptr)
        throw Error(Error::Kind::Input, "unknown operator '" + n.op + "' at node " + n.id);
      spec->check_node(n);
    }
  }
  for (const auto& t : outputs) {
    if (producers_.count(t) == 0)
      throw Error(Error::Kind::Input, "graph output is not produced: " + t);
  }
  // Acyclicity: the deterministic topological sort must cover every node.
  if (topo_order().size() != nodes.size())
    throw Error(Error::Kind::Input, "cycle detected in graph '" + name + "'");
}

std::vector<int> Graph::topo_order() const {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i) {
    for (const auto& t : nodes[i].inputs) {
      auto it = producers_.find(t);
      if (it != producers_.end() && it->second.kind == Producer::Kind::NodeOutput)
        ++indegree[i];
    }
  }
  std::set<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (const auto& t : nodes[i].outputs) {
      auto it = consumers_.find(t);
      if (it == consumers_.end()) continue;
      for (int c : it->second) {
        if (--indegree[c] == 0) ready.insert(c);
      }
    }
  }
  return order;
}

const Producer& Graph::producer(const std::string& t) const {
  auto it = producers_.find(t);
  if (it == producers_.end()) throw Error(Error::Kind::Internal, "no producer for tensor " + t);
  return it->second;
}

const std::vector<int>& Graph::consumers(const std::string& t) const {
  static const std::vector<int> empty;
  auto it = consumers_.find(t);
  return it == consumers_.end() ? empty : it->second;
}

bool Graph::is_graph_output(const std::string& t) const {
  return std::find(outputs.begin(), outputs.end(), t) != outputs.end();
}

const ConstDecl* Graph::find_constant(const std::string& t) const {
  auto it = producers_.find(t);
  if (it == producers_.end() || it->second.kind != Producer::Kind::Constant) return nullptr;
  return &constants[it->second.index];
}

std::vector<bool> Graph::reachable_from(int from) const {
  const int n = static_cast<int>(nodes.size());
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  auto push_consumers = [&](int node) {
    for (const auto& t : nodes[node].outputs) {
      for (int c : consumers(t)) {
        if (!seen[c]) {
          seen[c] = true;
          q.push(c);
        }
      }
    }
  };
  push_consumers(from);
  while (!q.empty()) {
    int i = q.front();
    q.pop();
    push_consumers(i);
  }
  return seen;
}

std::vector<std::string> Graph::tensor_names() const {
  std::vector<std::string> out;
  for (const auto& in : inputs) out.push_back(in.name);
  for (const auto& c : constants) out.push_back(c.name);
  for (const auto& n : nodes) {
    for (const auto& t : n.outputs) out.push_back(t);
  }
  return out;
}

std::vector<std::string> Graph::validate_switch_combine() const {
  std::vector<std::string> diags;
  const int n = static_cast<int>(nodes.size());
  std::vector<bool> combine_matched(n, false);
  for (int s = 0; s < n; ++s) {
    if (nodes[s].op != "Switch") continue;
    const Node& sw = nodes[s];
    const int branches = static_cast<int>(sw.outputs.size());
    // Reachability per gate.
    std::vector<std::vector<bool>> gate_reach(branches, std::vector<bool>(n, false));
    for (int b = 0; b < branches; ++b) {
      std::queue<int> q;
      for (int c : consumers(sw.outputs[b])) {
        if (!gate_reach[b][c]) {
          gate_reach[b][c] = true;
          q.push(c);
        }
      }
      while (!q.empty()) {
        int i = q.front();
        q.pop();
        for (const auto& t : nodes[i].outputs) {
          for (int c : consumers(t)) {
            if (!gate_reach[b][c]) {
              gate_reach[b][c] = true;
              q.push(c);
            }
          }
        }
      }
    }
    // The matching Combine is the earliest node reachable from every gate.
    int combine = -1;
    for (int i = 0; i < n && combine < 0; ++i) {
      if (nodes[i].op != "Combine") continue;
      bool all = true;
      for (int b = 0; b < branches; ++b) all &= gate_reach[b][i];
      if (all) combine = i;
    }
    if (combine < 0) {
      diags.push_back("Switch " + sw.id + ": no Combine reconverges all branches");
      continue;
    }
    combine_matched[combine] = true;
    // Branch membership stops at the Combine: nodes only reachable through it
    // belong to the code after reconvergence, not to a branch.
    for (int b = 0; b < branches; ++b) {
      std::vector<bool> restricted(n, false);
      std::queue<int> rq;
      for (int c : consumers(sw.outputs[b])) {
        if (c != combine && !restricted[c]) {
          restricted[c] = true;
          rq.push(c);
        }
      }
      while (!rq.empty()) {
        int i = rq.front();
        rq.pop();
        for (const auto& t : nodes[i].outputs) {
          for (int c : consumers(t)) {
            if (c != combine && !restricted[c]) {
              restricted[c] = true;
              rq.push(c);
            }
          }
        }
      }
      gate_reach[b] = std::move(restricted);
    }
    const Node& cm = nodes[combine];
    if (static_cast<int>(cm.inputs.size()) != branches) {
      diags.push_back("Switch " + sw.id + ": Combine " + cm.id + " arity " +
                      std::to_string(cm.inputs.size()) + " does not match branch count " +
                      std::to_string(branches));
    }
    std::vector<bool> from_combine = reachable_from(combine);
    // region(b) = nodes reachable from gate b that still reach the Combine.
    std::vector<std::set<int>> regions(branches);
    for (int b = 0; b < branches; ++b) {
      for (int i = 0; i < n; ++i) {
        if (!gate_reach[b][i] || i == combine) continue;
        std::vector<bool> r = reachable_from(i);
        if (r[combine]) {
          regions[b].insert(i);
        } else {
          diags.push_back("Switch " + sw.id + ": node " + nodes[i].id +
                          " in branch " + std::to_string(b) +
                          " escapes without reaching Combine " + cm.id);
        }
      }
      // A branch tensor used as a graph output escapes the region.
      for (int i : regions[b]) {
        for (const auto& t : nodes[i].outputs) {
          if (is_graph_output(t))
            diags.push_back("Switch " + sw.id + ": branch tensor " + t +
                            " escapes to graph outputs without Combine");
        }
      }
      if (is_graph_output(sw.outputs[b]))
        diags.push_back("Switch " + sw.id + ": gate tensor " + sw.outputs[b] +
                        " escapes to graph outputs without Combine");
    }
    for (int a = 0; a < branches; ++a) {
      for (int b = a + 1; b < branches; ++b) {
        for (int i : regions[a]) {
          if (regions[b].count(i) > 0)
            diags.push_back("Switch " + sw.id + ": node " + nodes[i].id +
                            " is shared between branches " + std::to_string(a) + " and " +
                            std::to_string(b));
        }
      }
    }
    // Combine input b must come from branch b (or be the gate itself).
    for (int b = 0; b < branches && b < static_cast<int>(cm.inputs.size()); ++b) {
      const std::string& t = cm.inputs[b];
      if (t == sw.outputs[b]) continue;
      const Producer& p = producer(t);
      if (p.kind != Producer::Kind::NodeOutput || regions[b].count(p.index) == 0)
        diags.push_back("Switch " + sw.id + ": Combine input " + std::to_string(b) +
                        " is not produced by branch " + std::to_string(b));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (nodes[i].op == "Combine" && !combine_matched[i])
      diags.push_back("Combine " + nodes[i].id + " has no matching Switch");
  }
  return diags;
}

}  // namespace dyndag
