// SPDX-License-Identifier: Apache-2.0

#include "dyndag/ops.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace dyndag {

bool ShapeInfo::fully_known() const {
  if (kind != Kind::Ranked) return false;
  for (const auto& d : dims) {
    if (!d.is_known()) return false;
  }
  return true;
}

bool ShapeInfo::has_nac_dim() const {
  if (kind == Kind::Nac) return true;
  for (const auto& d : dims) {
    if (d.is_nac()) return true;
  }
  return false;
}

bool ShapeInfo::has_undef_dim() const {
  if (kind == Kind::Undef) return true;
  for (const auto& d : dims) {
    if (d.is_undef()) return true;
  }
  return false;
}

std::string ShapeInfo::render() const {
  if (kind == Kind::Undef) return "undef";
  if (kind == Kind::Nac) return "nac";
  std::string r = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) r += ",";
    r += dims[i].render();
  }
  return r + "]";
}

bool ShapeInfo::operator==(const ShapeInfo& other) const {
  return kind == other.kind && dims == other.dims;
}

std::string ValueInfo::render() const {
  if (kind == Kind::Undef) return "undef";
  if (kind == Kind::Nac) return "nac";
  std::string r = "<";
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i) r += ",";
    r += elems[i].render();
  }
  return r + ">";
}

bool ValueInfo::operator==(const ValueInfo& other) const {
  return kind == other.kind && elems == other.elems;
}

ShapeInfo meet(const ShapeInfo& a, const ShapeInfo& b) {
  if (a.is_undef()) return b;
  if (b.is_undef()) return a;
  if (a.is_nac() || b.is_nac()) return ShapeInfo::nac();
  if (a.dims.size() != b.dims.size()) return ShapeInfo::nac();
  std::vector<DimValue> dims(a.dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) dims[i] = meet(a.dims[i], b.dims[i]);
  return ShapeInfo::ranked(std::move(dims));
}

ValueInfo meet(const ValueInfo& a, const ValueInfo& b) {
  if (a.is_undef()) return b;
  if (b.is_undef()) return a;
  if (a.is_nac() || b.is_nac()) return ValueInfo::nac();
  if (a.elems.size() != b.elems.size()) return ValueInfo::nac();
  std::vector<DimValue> elems(a.elems.size());
  for (std::size_t i = 0; i < elems.size(); ++i) elems[i] = meet(a.elems[i], b.elems[i]);
  return ValueInfo::tracked(std::move(elems));
}

bool lattice_le(const ShapeInfo& a, const ShapeInfo& b) {
  if (a.is_nac() || b.is_undef()) return true;
  if (a.is_undef() || b.is_nac()) return false;
  if (a.dims.size() != b.dims.size()) return false;
  for (std::size_t i = 0; i < a.dims.size(); ++i) {
    if (!lattice_le(a.dims[i], b.dims[i])) return false;
  }
  return true;
}

bool lattice_le(const ValueInfo& a, const ValueInfo& b) {
  if (a.is_nac() || b.is_undef()) return true;
  if (a.is_undef() || b.is_nac()) return false;
  if (a.elems.size() != b.elems.size()) return false;
  for (std::size_t i = 0; i < a.elems.size(); ++i) {
    if (!lattice_le(a.elems[i], b.elems[i])) return false;
  }
  return true;
}

std::string dynclass_name(DynClass c) {
  switch (c) {
    case DynClass::ISDO: return "ISDO";
    case DynClass::ISDOS: return "ISDOS";
    case DynClass::ISVDOS: return "ISVDOS";
    case DynClass::EDO: return "EDO";
  }
  return "?";
}

void OpSpec::check_node(const Node& n) const {
  const int in = static_cast<int>(n.inputs.size());
  if (in < min_arity || (max_arity >= 0 && in > max_arity))
    throw Error(Error::Kind::Input,
                "node " + n.id + ": op " + name + " arity " + std::to_string(in) +
                    " outside [" + std::to_string(min_arity) + "," +
                    std::to_string(max_arity) + "]");
  if (output_arity >= 0 && static_cast<int>(n.outputs.size()) != output_arity)
    throw Error(Error::Kind::Input, "node " + n.id + ": op " + name + " expects " +
                                        std::to_string(output_arity) + " outputs");
  for (auto it = n.attrs.begin(); it != n.attrs.end(); ++it) {
    if (std::find(attr_keys.begin(), attr_keys.end(), it.key()) == attr_keys.end())
      throw Error(Error::Kind::Input,
                  "node " + n.id + ": unknown attribute '" + it.key() + "' for op " + name);
  }
}

const std::vector<OpSpec>& catalog() {
  static const std::vector<OpSpec> ops = {
      // name, class, min_in, max_in, out, attrs, shape_input_indices
      {"Shape", DynClass::ISDO, 1, 1, 1, {}, {}},
      {"ConstantOfShape", DynClass::ISDO, 1, 1, 1, {"value"}, {}},
      {"EyeLike", DynClass::ISDO, 1, 1, 1, {}, {}},
      {"Add", DynClass::ISDOS, 2, 2, 1, {}, {}},
      {"Mul", DynClass::ISDOS, 2, 2, 1, {}, {}},
      {"Concat", DynClass::ISDOS, 1, -1, 1, {"axis"}, {}},
      {"Conv", DynClass::ISDOS, 2, 3, 1, {"strides", "pads", "kernel_shape"}, {}},
      {"MatMul", DynClass::ISDOS, 2, 2, 1, {}, {}},
      {"MaxPool", DynClass::ISDOS, 1, 1, 1, {"kernel_shape", "strides", "pads"}, {}},
      {"AveragePool", DynClass::ISDOS, 1, 1, 1, {"kernel_shape", "strides", "pads"}, {}},
      {"Gather", DynClass::ISDOS, 2, 2, 1, {"axis"}, {}},
      {"ReduceSum", DynClass::ISDOS, 1, 1, 1, {"axes", "keepdims"}, {}},
      {"ReduceMean", DynClass::ISDOS, 1, 1, 1, {"axes", "keepdims"}, {}},
      {"Relu", DynClass::ISDOS, 1, 1, 1, {}, {}},
      {"Sigmoid", DynClass::ISDOS, 1, 1, 1, {}, {}},
      {"Softmax", DynClass::ISDOS, 1, 1, 1, {"axis"}, {}},
      {"Cast", DynClass::ISDOS, 1, 1, 1, {"to"}, {}},
      {"Transpose", DynClass::ISDOS, 1, 1, 1, {"perm"}, {}},
      {"Reshape", DynClass::ISVDOS, 2, 2, 1, {}, {1}},
      {"Slice", DynClass::ISVDOS, 3, 5, 1, {}, {1, 2, 3, 4}},
      {"Expand", DynClass::ISVDOS, 2, 2, 1, {}, {1}},
      {"Range", DynClass::ISVDOS, 3, 3, 1, {}, {0, 1, 2}},
      {"Resize", DynClass::ISVDOS, 2, 2, 1, {}, {1}},
      {"TopK", DynClass::ISVDOS, 2, 2, -1, {"axis"}, {1}},
      {"NonZero", DynClass::EDO, 1, 1, 1, {}, {}},
      {"Loop", DynClass::EDO, 1, -1, -1, {}, {}},
      {"NMS", DynClass::EDO, 2, 5, 1, {}, {}},
      {"If", DynClass::EDO, 1, -1, -1, {}, {}},
      {"Switch", DynClass::EDO, 2, 2, -1, {}, {}},
      {"Combine", DynClass::EDO, 1, -1, 1, {}, {}},
  };
  return ops;
}

const OpSpec* find_op(const std::string& name) {
  for (const auto& op : catalog()) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

DynClass classify(const Graph& g, const Node& n) {
  if (n.opaque) return DynClass::EDO;
  const OpSpec* spec = find_op(n.op);
  if (spec == nullptr)
    throw Error(Error::Kind::Analysis, "unknown op at node " + n.id + ": " + n.op);
  if (spec->base_class != DynClass::ISVDOS) return spec->base_class;
  for (int idx : spec->shape_input_indices) {
    if (idx >= static_cast<int>(n.inputs.size())) continue;  // optional input absent
    const ConstDecl* c = g.find_constant(n.inputs[idx]);
    if (c == nullptr || !c->int_data.has_value()) return DynClass::ISVDOS;
  }
  return DynClass::ISDOS;
}

namespace {

[[noreturn]] void contradiction(const Node& n, const std::string& detail) {
  throw Error(Error::Kind::Analysis, "node " + n.id + " (" + n.op + "): " + detail);
}

DimValue broadcast_dim(const Node& n, const DimValue& a, const DimValue& b) {
  if (a.is_undef() || b.is_undef()) return DimValue::undef();
  if (a.is_known() && b.is_known()) {
    if (a.known_value() == 1) return b;
    if (b.known_value() == 1) return a;
    if (a.known_value() == b.known_value()) return a;
    contradiction(n, "cannot broadcast " + a.render() + " with " + b.render());
  }
  if (a.is_known()) return a.known_value() == 1 ? b : a;
  if (b.is_known()) return b.known_value() == 1 ? a : b;
  if (a == b) return a;
  // Two distinct symbolic/nac dims: one of them may still be 1 at runtime.
  return DimValue::nac();
}

ShapeInfo broadcast_shape(const Node& n, const ShapeInfo& a, const ShapeInfo& b) {
  if (a.is_undef() || b.is_undef()) return ShapeInfo::undef();
  if (a.is_nac() || b.is_nac()) return ShapeInfo::nac();
  const std::size_t rank = std::max(a.dims.size(), b.dims.size());
  std::vector<DimValue> dims(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ra = a.dims.size(), rb = b.dims.size();
    DimValue da = i + ra >= rank ? a.dims[i + ra - rank] : DimValue::known(1);
    DimValue db = i + rb >= rank ? b.dims[i + rb - rank] : DimValue::known(1);
    dims[i] = broadcast_dim(n, da, db);
  }
  return ShapeInfo::ranked(std::move(dims));
}

// For dims that must be equal at runtime (Concat non-axis dims): prefer the
// more specific side, error on provably different constants.
DimValue unify_equal_dim(const Node& n, const DimValue& a, const DimValue& b) {
  if (a.is_undef()) return b;
  if (b.is_undef()) return a;
  if (a.is_nac()) return b;
  if (b.is_nac()) return a;
  if (a.is_known() && b.is_known() && a.known_value() != b.known_value())
    contradiction(n, "dimensions must match: " + a.render() + " vs " + b.render());
  return a;
}

bool all_known(const std::vector<DimValue>& v) {
  return std::all_of(v.begin(), v.end(), [](const DimValue& d) { return d.is_known(); });
}

DimValue product_of(const std::vector<DimValue>& dims) {
  DimValue p = DimValue::known(1);
  for (const auto& d : dims) p = apply(SymOp::Mul, p, d);
  return p;
}

std::int64_t norm_axis(const Node& n, std::int64_t axis, std::int64_t rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank)
    contradiction(n, "axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
  return axis;
}

// Conv/pool spatial formula: floor((D + pad_b + pad_e - k) / stride) + 1.
DimValue pooled_dim(const DimValue& d, std::int64_t pad_total, std::int64_t kernel,
                    std::int64_t stride) {
  DimValue t = apply(SymOp::Add, d, DimValue::known(pad_total - kernel));
  t = apply(SymOp::FloorDiv, t, DimValue::known(stride));
  return apply(SymOp::Add, t, DimValue::known(1));
}

struct Ctx {
  const Graph& g;
  const Node& n;
  const std::vector<ShapeInfo>& S;
  const std::vector<ValueInfo>& V;
  int cap;

  const ShapeInfo& s(int i) const { return S[i]; }
  const ValueInfo& v(int i) const { return V[i]; }
  int nin() const { return static_cast<int>(n.inputs.size()); }
  int nout() const { return static_cast<int>(n.outputs.size()); }
};

TransferResult all_outputs(const Ctx& c, ShapeInfo s, ValueInfo v) {
  TransferResult r;
  r.shapes.assign(c.nout(), s);
  r.values.assign(c.nout(), v);
  return r;
}

TransferResult one(ShapeInfo s, ValueInfo v) {
  TransferResult r;
  r.shapes.push_back(std::move(s));
  r.values.push_back(std::move(v));
  return r;
}

// If any listed input shape is Undef/Nac, short-circuit all outputs likewise.
bool gate_on_shapes(const Ctx& c, const std::vector<int>& idx, TransferResult* out) {
  for (int i : idx) {
    if (c.s(i).is_undef()) {
      *out = all_outputs(c, ShapeInfo::undef(), ValueInfo::undef());
      return true;
    }
  }
  for (int i : idx) {
    if (c.s(i).is_nac()) {
      *out = all_outputs(c, ShapeInfo::nac(), ValueInfo::nac());
      return true;
    }
  }
  return false;
}

ValueInfo elementwise_value(const Ctx& c, SymOp op) {
  const ValueInfo& a = c.v(0);
  const ValueInfo& b = c.v(1);
  if (a.is_nac() || b.is_nac()) return ValueInfo::nac();
  if (a.is_undef() || b.is_undef()) return ValueInfo::undef();
  const std::size_t la = a.elems.size(), lb = b.elems.size();
  if (la != lb && la != 1 && lb != 1) return ValueInfo::nac();
  const std::size_t len = std::max(la, lb);
  if (len > static_cast<std::size_t>(c.cap)) return ValueInfo::nac();
  std::vector<DimValue> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    out[i] = apply(op, a.elems[la == 1 ? 0 : i], b.elems[lb == 1 ? 0 : i]);
  }
  return ValueInfo::tracked(std::move(out));
}

TransferResult fwd_shape_op(const Ctx& c) {
  if (c.s(0).is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (c.s(0).is_nac()) return one(ShapeInfo::ranked({DimValue::nac()}), ValueInfo::nac());
  const auto& dims = c.s(0).dims;
  ShapeInfo sh = ShapeInfo::ranked({DimValue::known(static_cast<std::int64_t>(dims.size()))});
  for (const auto& d : dims) {
    if (d.is_undef()) return one(sh, ValueInfo::undef());
  }
  if (dims.size() > static_cast<std::size_t>(c.cap)) return one(sh, ValueInfo::nac());
  return one(sh, ValueInfo::tracked(dims));
}

TransferResult fwd_constant_of_shape(const Ctx& c) {
  const ValueInfo& tv = c.v(0);
  if (tv.is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (tv.is_nac()) {
    // Rank is still the (known) length of the shape tensor.
    if (c.s(0).is_ranked() && c.s(0).dims.size() == 1 && c.s(0).dims[0].is_known())
      return one(ShapeInfo::ranked(std::vector<DimValue>(c.s(0).dims[0].known_value(),
                                                         DimValue::nac())),
                 ValueInfo::nac());
    return one(ShapeInfo::nac(), ValueInfo::nac());
  }
  ShapeInfo sh = ShapeInfo::ranked(tv.elems);
  std::int64_t fill = c.n.attr_int("value", 0);
  if (tv.elems.size() == 1 && tv.elems[0].is_known() &&
      tv.elems[0].known_value() <= c.cap) {
    return one(sh, ValueInfo::tracked(std::vector<DimValue>(tv.elems[0].known_value(),
                                                            DimValue::known(fill))));
  }
  return one(sh, ValueInfo::nac());
}

TransferResult fwd_elementwise_broadcast(const Ctx& c, SymOp op) {
  TransferResult gated;
  if (gate_on_shapes(c, {0, 1}, &gated)) {
    // Value arithmetic can still proceed on tracked values even when one
    // shape is unresolved, but keep it simple: gate everything together.
    return gated;
  }
  ShapeInfo sh = broadcast_shape(c.n, c.s(0), c.s(1));
  ValueInfo val = ValueInfo::nac();
  if (sh.is_ranked() && sh.dims.size() <= 1) val = elementwise_value(c, op);
  return one(sh, val);
}

TransferResult fwd_concat(const Ctx& c) {
  TransferResult gated;
  std::vector<int> idx(c.nin());
  std::iota(idx.begin(), idx.end(), 0);
  if (gate_on_shapes(c, idx, &gated)) return gated;
  const std::size_t rank = c.s(0).dims.size();
  for (int i = 1; i < c.nin(); ++i) {
    if (c.s(i).dims.size() != rank)
      contradiction(c.n, "Concat inputs must share rank");
  }
  std::int64_t axis = norm_axis(c.n, c.n.attr_int("axis", 0), rank);
  std::vector<DimValue> dims = c.s(0).dims;
  for (int i = 1; i < c.nin(); ++i) {
    for (std::size_t d = 0; d < rank; ++d) {
      if (static_cast<std::int64_t>(d) == axis) {
        dims[d] = apply(SymOp::Add, dims[d], c.s(i).dims[d]);
      } else {
        dims[d] = unify_equal_dim(c.n, dims[d], c.s(i).dims[d]);
      }
    }
  }
  ValueInfo val = ValueInfo::nac();
  if (rank == 1 && axis == 0) {
    std::vector<DimValue> elems;
    bool tracked = true, undef = false;
    for (int i = 0; i < c.nin(); ++i) {
      if (c.v(i).is_undef()) undef = true;
      if (!c.v(i).is_tracked()) {
        tracked = false;
        break;
      }
      elems.insert(elems.end(), c.v(i).elems.begin(), c.v(i).elems.end());
    }
    if (tracked && elems.size() <= static_cast<std::size_t>(c.cap)) {
      val = ValueInfo::tracked(std::move(elems));
    } else if (undef) {
      val = ValueInfo::undef();
    }
  }
  return one(ShapeInfo::ranked(std::move(dims)), val);
}

TransferResult fwd_conv_pool(const Ctx& c, bool has_weight) {
  TransferResult gated;
  if (gate_on_shapes(c, has_weight ? std::vector<int>{0, 1} : std::vector<int>{0}, &gated))
    return gated;
  const auto& in = c.s(0).dims;
  if (in.size() < 3) contradiction(c.n, "expects a rank >= 3 input");
  const std::size_t spatial = in.size() - 2;
  std::vector<std::int64_t> kernel = c.n.attr_ints("kernel_shape");
  DimValue out_channels = in[1];
  if (has_weight) {
    const auto& w = c.s(1).dims;
    if (w.size() != in.size()) contradiction(c.n, "weight rank must match input rank");
    if (in[1].is_known() && w[1].is_known() && in[1].known_value() != w[1].known_value())
      contradiction(c.n, "channel mismatch: " + in[1].render() + " vs " + w[1].render());
    out_channels = w[0];
    if (kernel.empty()) {
      for (std::size_t i = 0; i < spatial; ++i) {
        if (!w[2 + i].is_known())
          contradiction(c.n, "kernel spatial dims must be known");
        kernel.push_back(w[2 + i].known_value());
      }
    }
  }
  if (kernel.size() != spatial) contradiction(c.n, "kernel_shape rank mismatch");
  std::vector<std::int64_t> strides = c.n.attr_ints("strides");
  if (strides.empty()) strides.assign(spatial, 1);
  std::vector<std::int64_t> pads = c.n.attr_ints("pads");
  if (pads.empty()) pads.assign(2 * spatial, 0);
  if (strides.size() != spatial || pads.size() != 2 * spatial)
    contradiction(c.n, "strides/pads rank mismatch");
  std::vector<DimValue> dims;
  dims.push_back(in[0]);
  dims.push_back(out_channels);
  for (std::size_t i = 0; i < spatial; ++i) {
    dims.push_back(pooled_dim(in[2 + i], pads[i] + pads[spatial + i], kernel[i], strides[i]));
  }
  return one(ShapeInfo::ranked(std::move(dims)), ValueInfo::nac());
}

TransferResult fwd_matmul(const Ctx& c) {
  TransferResult gated;
  if (gate_on_shapes(c, {0, 1}, &gated)) return gated;
  const auto& a = c.s(0).dims;
  const auto& b = c.s(1).dims;
  if (a.size() < 2 || b.size() < 2) contradiction(c.n, "MatMul inputs must be rank >= 2");
  const DimValue& ka = a[a.size() - 1];
  const DimValue& kb = b[b.size() - 2];
  if (ka.is_known() && kb.is_known() && ka.known_value() != kb.known_value())
    contradiction(c.n, "inner dimensions differ: " + ka.render() + " vs " + kb.render());
  ShapeInfo batch_a = ShapeInfo::ranked({a.begin(), a.end() - 2});
  ShapeInfo batch_b = ShapeInfo::ranked({b.begin(), b.end() - 2});
  ShapeInfo batch = broadcast_shape(c.n, batch_a, batch_b);
  std::vector<DimValue> dims = batch.dims;
  dims.push_back(a[a.size() - 2]);
  dims.push_back(b[b.size() - 1]);
  return one(ShapeInfo::ranked(std::move(dims)), ValueInfo::nac());
}

TransferResult fwd_gather(const Ctx& c) {
  TransferResult gated;
  if (gate_on_shapes(c, {0, 1}, &gated)) return gated;
  const auto& data = c.s(0).dims;
  const auto& idx = c.s(1).dims;
  std::int64_t axis = norm_axis(c.n, c.n.attr_int("axis", 0), data.size());
  std::vector<DimValue> dims;
  for (std::int64_t i = 0; i < axis; ++i) dims.push_back(data[i]);
  for (const auto& d : idx) dims.push_back(d);
  for (std::size_t i = axis + 1; i < data.size(); ++i) dims.push_back(data[i]);
  ValueInfo val = ValueInfo::nac();
  if (axis == 0 && data.size() == 1 && dims.size() <= 1) {
    const ValueInfo& dv = c.v(0);
    const ValueInfo& iv = c.v(1);
    if (dv.is_undef() || iv.is_undef()) {
      val = ValueInfo::undef();
    } else if (dv.is_tracked() && iv.is_tracked() && all_known(iv.elems)) {
      std::vector<DimValue> elems;
      for (const auto& e : iv.elems) {
        std::int64_t i = e.known_value();
        if (i < 0) i += static_cast<std::int64_t>(dv.elems.size());
        if (i < 0 || i >= static_cast<std::int64_t>(dv.elems.size()))
          contradiction(c.n, "gather index out of range");
        elems.push_back(dv.elems[i]);
      }
      val = ValueInfo::tracked(std::move(elems));
    }
  }
  return one(ShapeInfo::ranked(std::move(dims)), val);
}

TransferResult fwd_reduce(const Ctx& c, bool is_sum) {
  TransferResult gated;
  if (gate_on_shapes(c, {0}, &gated)) return gated;
  const auto& in = c.s(0).dims;
  const std::int64_t rank = static_cast<std::int64_t>(in.size());
  std::vector<std::int64_t> axes = c.n.attr_ints("axes");
  if (axes.empty() && !c.n.has_attr("axes")) {
    axes.resize(rank);
    std::iota(axes.begin(), axes.end(), 0);
  }
  for (auto& a : axes) a = norm_axis(c.n, a, rank);
  const bool keepdims = c.n.attr_int("keepdims", 1) != 0;
  std::vector<DimValue> dims;
  for (std::int64_t i = 0; i < rank; ++i) {
    const bool reduced = std::find(axes.begin(), axes.end(), i) != axes.end();
    if (!reduced) {
      dims.push_back(in[i]);
    } else if (keepdims) {
      dims.push_back(DimValue::known(1));
    }
  }
  ValueInfo val = ValueInfo::nac();
  if (is_sum && rank == 1 && c.v(0).is_tracked()) {
    DimValue sum = DimValue::known(0);
    bool ok = true;
    for (const auto& e : c.v(0).elems) {
      if (e.is_undef()) ok = false;
      sum = apply(SymOp::Add, sum, e);
    }
    if (ok) val = ValueInfo::tracked({sum});
  } else if (c.v(0).is_undef()) {
    val = ValueInfo::undef();
  }
  return one(ShapeInfo::ranked(std::move(dims)), val);
}

TransferResult fwd_identity_shape(const Ctx& c, bool value_passthrough) {
  if (c.s(0).is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (c.s(0).is_nac()) return one(ShapeInfo::nac(), ValueInfo::nac());
  return one(c.s(0), value_passthrough ? c.v(0) : ValueInfo::nac());
}

TransferResult fwd_transpose(const Ctx& c) {
  TransferResult gated;
  if (gate_on_shapes(c, {0}, &gated)) return gated;
  const auto& in = c.s(0).dims;
  std::vector<std::int64_t> perm = c.n.attr_ints("perm");
  if (perm.empty()) {
    perm.resize(in.size());
    std::iota(perm.rbegin(), perm.rend(), 0);
  }
  if (perm.size() != in.size()) contradiction(c.n, "perm rank mismatch");
  std::vector<DimValue> dims(in.size());
  for (std::size_t i = 0; i < in.size(); ++i)
    dims[i] = in[norm_axis(c.n, perm[i], in.size())];
  // Rank <= 1 transpose is the identity; values survive.
  ValueInfo val = in.size() <= 1 ? c.v(0) : ValueInfo::nac();
  return one(ShapeInfo::ranked(std::move(dims)), val);
}

TransferResult fwd_reshape(const Ctx& c) {
  const ValueInfo& tv = c.v(1);
  if (tv.is_undef() || c.s(0).is_undef())
    return one(ShapeInfo::undef(), ValueInfo::undef());
  if (tv.is_nac()) {
    if (c.s(1).is_ranked() && c.s(1).dims.size() == 1 && c.s(1).dims[0].is_known())
      return one(ShapeInfo::ranked(std::vector<DimValue>(c.s(1).dims[0].known_value(),
                                                         DimValue::nac())),
                 ValueInfo::nac());
    return one(ShapeInfo::nac(), ValueInfo::nac());
  }
  std::vector<DimValue> dims = tv.elems;
  int wildcard = -1;
  DimValue rest = DimValue::known(1);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i].is_known() && dims[i].known_value() == -1) {
      if (wildcard >= 0) contradiction(c.n, "multiple -1 entries in Reshape target");
      wildcard = static_cast<int>(i);
    } else {
      rest = apply(SymOp::Mul, rest, dims[i]);
    }
  }
  if (wildcard >= 0) {
    if (c.s(0).is_nac()) {
      dims[wildcard] = DimValue::nac();
    } else {
      DimValue total = product_of(c.s(0).dims);
      dims[wildcard] = apply(SymOp::FloorDiv, total, rest);
    }
  }
  return one(ShapeInfo::ranked(std::move(dims)), ValueInfo::nac());
}

TransferResult fwd_slice(const Ctx& c) {
  TransferResult gated;
  if (gate_on_shapes(c, {0}, &gated)) return gated;
  const auto& in = c.s(0).dims;
  const std::int64_t rank = static_cast<std::int64_t>(in.size());
  const ValueInfo& starts = c.v(1);
  const ValueInfo& ends = c.v(2);
  if (starts.is_undef() || ends.is_undef())
    return one(ShapeInfo::undef(), ValueInfo::undef());
  std::vector<std::int64_t> axes;
  bool axes_known = true;
  if (c.nin() >= 4) {
    const ValueInfo& av = c.v(3);
    if (av.is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
    if (av.is_tracked() && all_known(av.elems)) {
      for (const auto& e : av.elems) axes.push_back(norm_axis(c.n, e.known_value(), rank));
    } else {
      axes_known = false;
    }
  } else if (starts.is_tracked()) {
    axes.resize(starts.elems.size());
    std::iota(axes.begin(), axes.end(), 0);
  } else {
    axes_known = false;
  }
  bool unit_steps = true;
  if (c.nin() >= 5) {
    const ValueInfo& sv = c.v(4);
    if (sv.is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
    unit_steps = sv.is_tracked() && all_known(sv.elems) &&
                 std::all_of(sv.elems.begin(), sv.elems.end(),
                             [](const DimValue& d) { return d.known_value() == 1; });
  }
  if (!axes_known || !starts.is_tracked() || !ends.is_tracked()) {
    // Which axes shrink is unknown; every dim may change.
    return one(ShapeInfo::ranked(std::vector<DimValue>(rank, DimValue::nac())),
               ValueInfo::nac());
  }
  std::vector<DimValue> dims = in;
  constexpr std::int64_t kHuge = (1LL << 31) - 1;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (!unit_steps) {
      dims[axes[i]] = DimValue::nac();
      continue;
    }
    DimValue s = starts.elems[i];
    DimValue e = ends.elems[i];
    const DimValue& d = in[axes[i]];
    if (s.is_known() && s.known_value() < 0) s = apply(SymOp::Add, d, s);
    if (e.is_known() && e.known_value() < 0) {
      e = apply(SymOp::Add, d, e);
    } else if (e.is_known() && e.known_value() >= kHuge) {
      e = d;  // the conventional "slice to the end" sentinel
    } else if (!e.is_nac() && !e.is_undef() && !d.is_nac() && !d.is_undef()) {
      e = apply(SymOp::Min, e, d);
    }
    dims[axes[i]] = apply(SymOp::Sub, e, s);
  }
  ValueInfo val = ValueInfo::nac();
  if (rank == 1 && c.v(0).is_tracked() && axes.size() == 1 && axes[0] == 0 && unit_steps &&
      starts.elems[0].is_known() && ends.elems[0].is_known()) {
    const auto& elems = c.v(0).elems;
    std::int64_t len = static_cast<std::int64_t>(elems.size());
    std::int64_t s = starts.elems[0].known_value();
    std::int64_t e = ends.elems[0].known_value();
    if (s < 0) s += len;
    if (e < 0) e += len;
    e = std::min(e, len);
    s = std::max<std::int64_t>(s, 0);
    std::vector<DimValue> sub;
    for (std::int64_t i = s; i < e; ++i) sub.push_back(elems[i]);
    val = ValueInfo::tracked(std::move(sub));
  }
  return one(ShapeInfo::ranked(std::move(dims)), val);
}

TransferResult fwd_expand(const Ctx& c) {
  const ValueInfo& tv = c.v(1);
  if (c.s(0).is_undef() || tv.is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (c.s(0).is_nac()) return one(ShapeInfo::nac(), ValueInfo::nac());
  if (tv.is_nac()) {
    if (c.s(1).is_ranked() && c.s(1).dims.size() == 1 && c.s(1).dims[0].is_known()) {
      std::size_t rank = std::max<std::size_t>(c.s(0).dims.size(),
                                               c.s(1).dims[0].known_value());
      return one(ShapeInfo::ranked(std::vector<DimValue>(rank, DimValue::nac())),
                 ValueInfo::nac());
    }
    return one(ShapeInfo::nac(), ValueInfo::nac());
  }
  ShapeInfo target = ShapeInfo::ranked(tv.elems);
  return one(broadcast_shape(c.n, c.s(0), target), ValueInfo::nac());
}

TransferResult fwd_range(const Ctx& c) {
  const ValueInfo &sv = c.v(0), &lv = c.v(1), &dv = c.v(2);
  if (sv.is_undef() || lv.is_undef() || dv.is_undef())
    return one(ShapeInfo::undef(), ValueInfo::undef());
  auto scalar = [](const ValueInfo& v) -> DimValue {
    if (!v.is_tracked() || v.elems.size() != 1) return DimValue::nac();
    return v.elems[0];
  };
  DimValue start = scalar(sv), limit = scalar(lv), delta = scalar(dv);
  DimValue len = DimValue::nac();
  if (delta.is_known() && delta.known_value() > 0 && !start.is_nac() && !limit.is_nac()) {
    DimValue span = apply(SymOp::Sub, limit, start);
    span = apply(SymOp::Add, span, DimValue::known(delta.known_value() - 1));
    len = apply(SymOp::FloorDiv, span, delta);
  }
  ValueInfo val = ValueInfo::nac();
  if (len.is_known() && len.known_value() <= c.cap && start.is_known() && delta.is_known()) {
    std::vector<DimValue> elems;
    for (std::int64_t i = 0; i < len.known_value(); ++i)
      elems.push_back(DimValue::known(start.known_value() + i * delta.known_value()));
    val = ValueInfo::tracked(std::move(elems));
  }
  return one(ShapeInfo::ranked({len}), val);
}

TransferResult fwd_resize(const Ctx& c) {
  const ValueInfo& tv = c.v(1);
  if (c.s(0).is_undef() || tv.is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (c.s(0).is_nac()) return one(ShapeInfo::nac(), ValueInfo::nac());
  const std::size_t rank = c.s(0).dims.size();
  if (tv.is_nac())
    return one(ShapeInfo::ranked(std::vector<DimValue>(rank, DimValue::nac())),
               ValueInfo::nac());
  if (tv.elems.size() != rank) contradiction(c.n, "Resize sizes rank mismatch");
  return one(ShapeInfo::ranked(tv.elems), ValueInfo::nac());
}

TransferResult fwd_topk(const Ctx& c) {
  TransferResult gated;
  if (gate_on_shapes(c, {0}, &gated)) return gated;
  const auto& in = c.s(0).dims;
  std::int64_t axis = norm_axis(c.n, c.n.attr_int("axis", -1), in.size());
  const ValueInfo& kv = c.v(1);
  DimValue k = DimValue::nac();
  if (kv.is_undef()) return all_outputs(c, ShapeInfo::undef(), ValueInfo::undef());
  if (kv.is_tracked() && kv.elems.size() == 1) k = kv.elems[0];
  std::vector<DimValue> dims = in;
  dims[axis] = k;
  return all_outputs(c, ShapeInfo::ranked(std::move(dims)), ValueInfo::nac());
}

TransferResult fwd_nonzero(const Ctx& c) {
  if (c.s(0).is_undef()) return one(ShapeInfo::undef(), ValueInfo::undef());
  if (c.s(0).is_nac())
    return one(ShapeInfo::ranked({DimValue::nac(), DimValue::nac()}), ValueInfo::nac());
  return one(ShapeInfo::ranked({DimValue::known(static_cast<std::int64_t>(c.s(0).dims.size())),
                                DimValue::nac()}),
             ValueInfo::nac());
}

TransferResult fwd_switch(const Ctx& c) {
  // inputs: [predicate, data]; every gate carries the data tensor through.
  TransferResult r;
  r.shapes.assign(c.nout(), c.s(1));
  r.values.assign(c.nout(), c.v(1));
  return r;
}

TransferResult fwd_combine(const Ctx& c) {
  ShapeInfo sh = ShapeInfo::undef();
  ValueInfo val = ValueInfo::undef();
  for (int i = 0; i < c.nin(); ++i) {
    sh = meet(sh, c.s(i));
    val = meet(val, c.v(i));
  }
  return one(sh, val);
}

}  // namespace

TransferResult forward_transfer(const Graph& g, const Node& n,
                                const std::vector<ShapeInfo>& in_shapes,
                                const std::vector<ValueInfo>& in_values, int cap) {
  if (in_shapes.size() != n.inputs.size() || in_values.size() != n.inputs.size())
    throw Error(Error::Kind::Internal, "transfer arity mismatch at node " + n.id);
  Ctx c{g, n, in_shapes, in_values, cap};
  if (n.opaque) return all_outputs(c, ShapeInfo::nac(), ValueInfo::nac());
  const std::string& op = n.op;
  if (op == "Shape") return fwd_shape_op(c);
  if (op == "ConstantOfShape") return fwd_constant_of_shape(c);
  if (op == "EyeLike") return fwd_identity_shape(c, false);
  if (op == "Add") return fwd_elementwise_broadcast(c, SymOp::Add);
  if (op == "Mul") return fwd_elementwise_broadcast(c, SymOp::Mul);
  if (op == "Concat") return fwd_concat(c);
  if (op == "Conv") return fwd_conv_pool(c, true);
  if (op == "MaxPool" || op == "AveragePool") return fwd_conv_pool(c, false);
  if (op == "MatMul") return fwd_matmul(c);
  if (op == "Gather") return fwd_gather(c);
  if (op == "ReduceSum") return fwd_reduce(c, true);
  if (op == "ReduceMean") return fwd_reduce(c, false);
  if (op == "Relu" || op == "Sigmoid" || op == "Softmax")
    return fwd_identity_shape(c, false);
  if (op == "Cast") return fwd_identity_shape(c, true);
  if (op == "Transpose") return fwd_transpose(c);
  if (op == "Reshape") return fwd_reshape(c);
  if (op == "Slice") return fwd_slice(c);
  if (op == "Expand") return fwd_expand(c);
  if (op == "Range") return fwd_range(c);
  if (op == "Resize") return fwd_resize(c);
  if (op == "TopK") return fwd_topk(c);
  if (op == "NonZero") return fwd_nonzero(c);
  if (op == "Switch") return fwd_switch(c);
  if (op == "Combine") return fwd_combine(c);
  // Remaining EDO ops (Loop, NMS, If).
  return all_outputs(c, ShapeInfo::nac(), ValueInfo::nac());
}

std::vector<ShapeInfo> forward_shape(const Graph& g, const Node& n,
                                     const std::vector<ShapeInfo>& in_shapes,
                                     const std::vector<ValueInfo>& in_values, int cap) {
  return forward_transfer(g, n, in_shapes, in_values, cap).shapes;
}

std::vector<ValueInfo> forward_value(const Graph& g, const Node& n,
                                     const std::vector<ShapeInfo>& in_shapes,
                                     const std::vector<ValueInfo>& in_values, int cap) {
  return forward_transfer(g, n, in_shapes, in_values, cap).values;
}

namespace {

// Fill only Undef entries of `in` from `out` (whole-shape or per-dim).
ShapeInfo refine_from(const ShapeInfo& in, const ShapeInfo& out) {
  if (out.is_undef() || out.is_nac()) return in;
  if (in.is_undef()) return out;
  if (!in.is_ranked() || in.dims.size() != out.dims.size()) return in;
  ShapeInfo r = in;
  for (std::size_t i = 0; i < r.dims.size(); ++i) {
    if (r.dims[i].is_undef()) r.dims[i] = out.dims[i];
  }
  return r;
}

}  // namespace

std::vector<ShapeInfo> backward_shape(const Graph& g, const Node& n,
                                      const std::vector<ShapeInfo>& out_shapes,
                                      const std::vector<ShapeInfo>& in_shapes) {
  std::vector<ShapeInfo> refined = in_shapes;
  if (n.opaque || out_shapes.empty()) return refined;
  const std::string& op = n.op;
  const ShapeInfo& out = out_shapes[0];
  if (op == "Relu" || op == "Sigmoid" || op == "Softmax" || op == "Cast" ||
      op == "EyeLike") {
    refined[0] = refine_from(refined[0], out);
    return refined;
  }
  if (op == "Transpose" && out.is_ranked()) {
    std::vector<std::int64_t> perm = n.attr_ints("perm");
    if (perm.empty()) {
      perm.resize(out.dims.size());
      std::iota(perm.rbegin(), perm.rend(), 0);
    }
    if (perm.size() != out.dims.size()) return refined;
    std::vector<DimValue> dims(out.dims.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      std::int64_t p = perm[i] < 0 ? perm[i] + static_cast<std::int64_t>(dims.size())
                                   : perm[i];
      if (p < 0 || p >= static_cast<std::int64_t>(dims.size())) return refined;
      dims[p] = out.dims[i];
    }
    refined[0] = refine_from(refined[0], ShapeInfo::ranked(std::move(dims)));
    return refined;
  }
  if ((op == "Add" || op == "Mul") && out.is_ranked()) {
    // Broadcasting: an input dim is either 1 or the output dim; only a
    // Known(1) output dim pins the input dim. The rank itself is refined.
    std::vector<DimValue> dims(out.dims.size(), DimValue::undef());
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (out.dims[i].is_known() && out.dims[i].known_value() == 1)
        dims[i] = DimValue::known(1);
    }
    for (auto& in : refined) in = refine_from(in, ShapeInfo::ranked(dims));
    return refined;
  }
  if (op == "Concat" && out.is_ranked()) {
    std::int64_t rank = static_cast<std::int64_t>(out.dims.size());
    std::int64_t axis = n.attr_int("axis", 0);
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) return refined;
    std::vector<DimValue> dims = out.dims;
    dims[axis] = DimValue::undef();
    for (auto& in : refined) in = refine_from(in, ShapeInfo::ranked(dims));
    return refined;
  }
  return refined;
}

std::vector<ShapeInfo> backward_value(const Graph& g, const Node& n,
                                      const std::vector<ValueInfo>& out_values,
                                      const std::vector<ShapeInfo>& in_shapes) {
  std::vector<ShapeInfo> refined = in_shapes;
  if (n.op == "Shape" && !out_values.empty() && out_values[0].is_tracked())
    refined[0] = refine_from(refined[0], ShapeInfo::ranked(out_values[0].elems));
  return refined;
}

std::map<std::string, DType> infer_dtypes(const Graph& g) {
  std::map<std::string, DType> out;
  for (const auto& in : g.inputs) out[in.name] = in.dtype;
  for (const auto& c : g.constants) out[c.name] = c.dtype;
  for (int i : g.topo_order()) {
    const Node& n = g.nodes[i];
    DType base = DType::F32;
    if (!n.inputs.empty()) {
      // First flowing input that already has a dtype.
      for (const auto& t : n.inputs) {
        auto it = out.find(t);
        if (it != out.end()) {
          base = it->second;
          break;
        }
      }
    }
    for (std::size_t o = 0; o < n.outputs.size(); ++o) {
      DType d = base;
      if (n.op == "Shape" || n.op == "NonZero" || n.op == "Range") {
        d = DType::I64;
      } else if (n.op == "TopK" && o == 1) {
        d = DType::I64;
      } else if (n.op == "Cast" && n.attrs.contains("to")) {
        d = dtype_parse(n.attrs.at("to").get<std::string>());
      } else if (n.op == "Switch" || n.op == "Combine") {
        // data input dtype
        auto it = out.find(n.inputs[n.op == "Switch" ? 1 : 0]);
        if (it != out.end()) d = it->second;
      }
      out[n.outputs[o]] = d;
    }
  }
  return out;
}

}  // namespace dyndag
