// SPDX-License-Identifier: Apache-2.0
//
// Operator semantics registry: dynamism classification and the forward /
// backward transfer functions over the shape (S) and value (V) lattices.

#pragma once

#include <string>
#include <vector>

#include "dyndag/graph.hpp"
#include "dyndag/sym.hpp"

namespace dyndag {

// Per-tensor S-map entry: rank either unresolved, known with per-dim lattice
// values, or statically unknowable.
struct ShapeInfo {
  enum class Kind { Undef, Ranked, Nac };
  Kind kind = Kind::Undef;
  std::vector<DimValue> dims;

  static ShapeInfo undef() { return {}; }
  static ShapeInfo nac() { return {Kind::Nac, {}}; }
  static ShapeInfo ranked(std::vector<DimValue> d) { return {Kind::Ranked, std::move(d)}; }

  bool is_undef() const { return kind == Kind::Undef; }
  bool is_nac() const { return kind == Kind::Nac; }
  bool is_ranked() const { return kind == Kind::Ranked; }
  bool fully_known() const;
  bool has_nac_dim() const;
  bool has_undef_dim() const;

  std::string render() const;
  bool operator==(const ShapeInfo& other) const;
  bool operator!=(const ShapeInfo& other) const { return !(*this == other); }
};

// Per-tensor V-map entry, tracked only for small integer tensors.
struct ValueInfo {
  enum class Kind { Undef, Tracked, Nac };
  Kind kind = Kind::Undef;
  std::vector<DimValue> elems;

  static ValueInfo undef() { return {}; }
  static ValueInfo nac() { return {Kind::Nac, {}}; }
  static ValueInfo tracked(std::vector<DimValue> e) { return {Kind::Tracked, std::move(e)}; }

  bool is_undef() const { return kind == Kind::Undef; }
  bool is_nac() const { return kind == Kind::Nac; }
  bool is_tracked() const { return kind == Kind::Tracked; }

  std::string render() const;
  bool operator==(const ValueInfo& other) const;
  bool operator!=(const ValueInfo& other) const { return !(*this == other); }
};

ShapeInfo meet(const ShapeInfo& a, const ShapeInfo& b);
ValueInfo meet(const ValueInfo& a, const ValueInfo& b);
bool lattice_le(const ShapeInfo& a, const ShapeInfo& b);
bool lattice_le(const ValueInfo& a, const ValueInfo& b);

enum class DynClass { ISDO, ISDOS, ISVDOS, EDO };

std::string dynclass_name(DynClass c);

struct OpSpec {
  std::string name;
  DynClass base_class;
  int min_arity;
  int max_arity;    // -1: unbounded
  int output_arity; // -1: variable
  std::vector<std::string> attr_keys;
  // Indices of inputs whose VALUES determine the output shape (ISVDOS only).
  std::vector<int> shape_input_indices;

  void check_node(const Node& n) const;
};

const OpSpec* find_op(const std::string& name);
const std::vector<OpSpec>& catalog();

// Effective dynamism class of a node: ISVDOS downgrades to ISDOS when every
// shape-determining input is a constant carrying a payload; opaque nodes are
// EDO; EDO never downgrades.
DynClass classify(const Graph& g, const Node& n);

struct TransferResult {
  std::vector<ShapeInfo> shapes;
  std::vector<ValueInfo> values;
};

// Forward transfer for one node. `cap` bounds value tracking (rank <= 1
// tensors up to `cap` elements). Throws Error(Analysis) on a static shape
// contradiction, naming the node.
TransferResult forward_transfer(const Graph& g, const Node& n,
                                const std::vector<ShapeInfo>& in_shapes,
                                const std::vector<ValueInfo>& in_values,
                                int cap = 32);

std::vector<ShapeInfo> forward_shape(const Graph& g, const Node& n,
                                     const std::vector<ShapeInfo>& in_shapes,
                                     const std::vector<ValueInfo>& in_values,
                                     int cap = 32);
std::vector<ValueInfo> forward_value(const Graph& g, const Node& n,
                                     const std::vector<ShapeInfo>& in_shapes,
                                     const std::vector<ValueInfo>& in_values,
                                     int cap = 32);

// Backward shape transfer: returns input shapes with ONLY Undef entries
// (whole shapes or individual dims) refined from the output shapes.
std::vector<ShapeInfo> backward_shape(const Graph& g, const Node& n,
                                      const std::vector<ShapeInfo>& out_shapes,
                                      const std::vector<ShapeInfo>& in_shapes);

// Backward value refinement: implemented for Shape only (a known output
// value pins the input's shape); identity elsewhere.
std::vector<ShapeInfo> backward_value(const Graph& g, const Node& n,
                                      const std::vector<ValueInfo>& out_values,
                                      const std::vector<ShapeInfo>& in_shapes);

// Output dtypes for every tensor (inputs and constants as declared, node
// outputs per operator rule: Shape/NonZero/TopK-indices emit i64, Cast obeys
// its `to` attribute, everything else follows its first flowing input).
std::map<std::string, DType> infer_dtypes(const Graph& g);

}  // namespace dyndag
