// SPDX-License-Identifier: Apache-2.0
//
// The extended computational graph: a DAG of operator nodes plus the
// <Switch, Combine> control-flow pair, with JSON (de)serialization,
// structural validation, and traversal utilities.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyndag/sym.hpp"

namespace dyndag {

enum class DType { F32, F16, I64, I32, Bool };

int dtype_size(DType t);
DType dtype_parse(const std::string& s);
std::string dtype_name(DType t);

struct InputDecl {
  std::string name;
  DType dtype = DType::F32;
  std::vector<DimValue> shape;
};

struct ConstDecl {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  std::optional<std::vector<std::int64_t>> int_data;  // payload for shape-feeding constants
};

struct Node {
  std::string id;
  std::string op;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
  bool opaque = false;

  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const;
  std::vector<std::int64_t> attr_ints(const std::string& key) const;
  bool has_attr(const std::string& key) const { return attrs.contains(key); }
};

// Producer of a tensor: a graph input, a constant, or one node output.
struct Producer {
  enum class Kind { Input, Constant, NodeOutput };
  Kind kind;
  int index;       // index into inputs/constants/nodes
  int output_pos;  // for NodeOutput: position in the node's output list
};

class Graph {
 public:
  std::string name;
  std::vector<std::string> symbols;
  std::vector<InputDecl> inputs;
  std::vector<ConstDecl> constants;
  std::vector<Node> nodes;
  std::vector<std::string> outputs;

  static Graph load(const std::string& path);
  static Graph from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;

  // Validates all structural invariants; throws Error(Input) on violation.
  // Called by from_json; call again after programmatic edits.
  void validate();

  // Deterministic topological order of node indices (ready nodes taken in
  // node-list position order).
  std::vector<int> topo_order() const;

  // Structural diagnostics for <Switch, Combine> regions; empty when valid.
  std::vector<std::string> validate_switch_combine() const;

  bool has_tensor(const std::string& t) const { return producers_.count(t) > 0; }
  const Producer& producer(const std::string& t) const;
  // Node indices consuming a tensor (in node-list order, with multiplicity).
  const std::vector<int>& consumers(const std::string& t) const;
  bool is_graph_output(const std::string& t) const;
  const ConstDecl* find_constant(const std::string& t) const;

  // Node indices reachable from node `from` via data edges (excluding it).
  std::vector<bool> reachable_from(int from) const;

  // All tensor names in producer order: inputs, constants, then node outputs.
  std::vector<std::string> tensor_names() const;

 private:
  std::map<std::string, Producer> producers_;
  std::map<std::string, std::vector<int>> consumers_;

  void index();
};

}  // namespace dyndag
