// SPDX-License-Identifier: Apache-2.0

#include "dyndag/interp.hpp"

#include <algorithm>
#include <numeric>

namespace dyndag {

namespace {

constexpr std::size_t kValueTrackLimit = 4096;

struct Tensor {
  std::vector<std::int64_t> shape;
  std::optional<std::vector<std::int64_t>> value;
};

[[noreturn]] void fail(const Node& n, const std::string& msg) {
  throw Error(Error::Kind::Analysis, "node " + n.id + " (" + n.op + "): " + msg);
}

std::int64_t numel(const std::vector<std::int64_t>& shape) {
  std::int64_t p = 1;
  for (auto d : shape) p *= d;
  return p;
}

// Stable string hash (FNV-1a) so pseudo-outcomes are reproducible across
// platforms, unlike std::hash.
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Machine {
  const Graph& g;
  const ConcreteEnv& env;
  std::map<std::string, DType> dtypes;
  std::map<std::string, Tensor> tensors;
  Trace trace;

  Machine(const Graph& graph, const ConcreteEnv& e) : g(graph), env(e) {
    dtypes = infer_dtypes(g);
  }

  bool int_dtype(const std::string& t) const {
    DType d = dtypes.at(t);
    return d == DType::I64 || d == DType::I32 || d == DType::Bool;
  }

  void set(const std::string& name, Tensor t) {
    for (auto d : t.shape) {
      if (d < 0)
        throw Error(Error::Kind::Analysis, "negative dimension for " + name);
    }
    if (t.value && (!int_dtype(name) || t.shape.size() > 1 ||
                    t.value->size() > kValueTrackLimit))
      t.value.reset();
    trace.shapes[name] = t.shape;
    if (t.value) trace.values[name] = *t.value;
    tensors[name] = std::move(t);
  }

  const Tensor& get(const std::string& name) const { return tensors.at(name); }

  std::vector<std::int64_t> outcome(const Node& n, int out_idx,
                                    std::vector<std::int64_t> fallback) const {
    auto it = env.outcomes.find(n.id + ":" + std::to_string(out_idx));
    if (it == env.outcomes.end() && out_idx == 0) it = env.outcomes.find(n.id);
    if (it != env.outcomes.end()) return it->second;
    return fallback;
  }

  std::uint64_t pseudo(const Node& n, const std::string& what) const {
    return fnv1a(n.id + "/" + what, env.seed * 0x9e3779b97f4a7c15ull + 1);
  }

  void seed_graph_io() {
    for (const auto& in : g.inputs) {
      Tensor t;
      for (const auto& d : in.shape) {
        if (d.is_known()) {
          t.shape.push_back(d.known_value());
        } else if (d.is_sym()) {
          t.shape.push_back(d.expr().evaluate(env.symbols));
        } else {
          throw Error(Error::Kind::Input,
                      "input " + in.name + " has an unbound dimension");
        }
      }
      auto v = env.values.find(in.name);
      if (v != env.values.end()) {
        if (t.shape.size() > 1 ||
            static_cast<std::int64_t>(v->second.size()) != numel(t.shape))
          throw Error(Error::Kind::Input,
                      "payload for " + in.name + " does not match its shape");
        t.value = v->second;
      }
      set(in.name, std::move(t));
    }
    for (const auto& c : g.constants) {
      Tensor t;
      t.shape.assign(c.shape.begin(), c.shape.end());
      if (c.int_data) t.value = *c.int_data;
      set(c.name, std::move(t));
    }
  }

  // ---- concrete per-op semantics -------------------------------------

  static std::vector<std::int64_t> broadcast(const Node& n,
                                             const std::vector<std::int64_t>& a,
                                             const std::vector<std::int64_t>& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    std::vector<std::int64_t> out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
      std::int64_t da = i + a.size() >= rank ? a[i + a.size() - rank] : 1;
      std::int64_t db = i + b.size() >= rank ? b[i + b.size() - rank] : 1;
      if (da != db && da != 1 && db != 1)
        fail(n, "cannot broadcast " + std::to_string(da) + " with " +
                    std::to_string(db));
      out[i] = std::max(da, db);
    }
    return out;
  }

  Tensor elementwise(const Node& n, bool mul) {
    const Tensor& a = get(n.inputs[0]);
    const Tensor& b = get(n.inputs[1]);
    Tensor out;
    out.shape = broadcast(n, a.shape, b.shape);
    if (a.value && b.value && out.shape.size() <= 1) {
      std::size_t len = out.shape.empty() ? 1 : out.shape[0];
      std::vector<std::int64_t> v(len);
      for (std::size_t i = 0; i < len; ++i) {
        std::int64_t x = (*a.value)[a.value->size() == 1 ? 0 : i];
        std::int64_t y = (*b.value)[b.value->size() == 1 ? 0 : i];
        v[i] = mul ? x * y : x + y;
      }
      out.value = std::move(v);
    }
    return out;
  }

  Tensor concat(const Node& n) {
    const Tensor& first = get(n.inputs[0]);
    std::int64_t rank = static_cast<std::int64_t>(first.shape.size());
    std::int64_t axis = n.attr_int("axis", 0);
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) fail(n, "axis out of range");
    Tensor out;
    out.shape = first.shape;
    bool track = first.value.has_value() && rank == 1 && axis == 0;
    std::vector<std::int64_t> v = track ? *first.value : std::vector<std::int64_t>{};
    for (std::size_t i = 1; i < n.inputs.size(); ++i) {
      const Tensor& t = get(n.inputs[i]);
      if (static_cast<std::int64_t>(t.shape.size()) != rank)
        fail(n, "inputs must share rank");
      for (std::int64_t d = 0; d < rank; ++d) {
        if (d == axis) {
          out.shape[d] += t.shape[d];
        } else if (t.shape[d] != out.shape[d]) {
          fail(n, "non-axis dimensions must match");
        }
      }
      if (track && t.value) {
        v.insert(v.end(), t.value->begin(), t.value->end());
      } else {
        track = false;
      }
    }
    if (track) out.value = std::move(v);
    return out;
  }

  Tensor conv_pool(const Node& n, bool has_weight) {
    const Tensor& in = get(n.inputs[0]);
    if (in.shape.size() < 3) fail(n, "expects a rank >= 3 input");
    const std::size_t spatial = in.shape.size() - 2;
    std::vector<std::int64_t> kernel = n.attr_ints("kernel_shape");
    std::int64_t out_ch = in.shape[1];
    if (has_weight) {
      const Tensor& w = get(n.inputs[1]);
      if (w.shape.size() != in.shape.size()) fail(n, "weight rank mismatch");
      if (w.shape[1] != in.shape[1]) fail(n, "channel mismatch");
      out_ch = w.shape[0];
      if (kernel.empty()) kernel.assign(w.shape.begin() + 2, w.shape.end());
    }
    if (kernel.size() != spatial) fail(n, "kernel_shape rank mismatch");
    std::vector<std::int64_t> strides = n.attr_ints("strides");
    if (strides.empty()) strides.assign(spatial, 1);
    std::vector<std::int64_t> pads = n.attr_ints("pads");
    if (pads.empty()) pads.assign(2 * spatial, 0);
    Tensor out;
    out.shape = {in.shape[0], out_ch};
    for (std::size_t i = 0; i < spatial; ++i) {
      std::int64_t d = in.shape[2 + i] + pads[i] + pads[spatial + i] - kernel[i];
      if (d < 0) fail(n, "kernel larger than padded input");
      out.shape.push_back(d / strides[i] + 1);
    }
    return out;
  }

  Tensor matmul(const Node& n) {
    const Tensor& a = get(n.inputs[0]);
    const Tensor& b = get(n.inputs[1]);
    if (a.shape.size() < 2 || b.shape.size() < 2) fail(n, "inputs must be rank >= 2");
    if (a.shape[a.shape.size() - 1] != b.shape[b.shape.size() - 2])
      fail(n, "inner dimensions differ: " +
                  std::to_string(a.shape[a.shape.size() - 1]) + " vs " +
                  std::to_string(b.shape[b.shape.size() - 2]));
    std::vector<std::int64_t> ba(a.shape.begin(), a.shape.end() - 2);
    std::vector<std::int64_t> bb(b.shape.begin(), b.shape.end() - 2);
    Tensor out;
    out.shape = broadcast(n, ba, bb);
    out.shape.push_back(a.shape[a.shape.size() - 2]);
    out.shape.push_back(b.shape[b.shape.size() - 1]);
    return out;
  }

  Tensor gather(const Node& n) {
    const Tensor& data = get(n.inputs[0]);
    const Tensor& idx = get(n.inputs[1]);
    std::int64_t rank = static_cast<std::int64_t>(data.shape.size());
    std::int64_t axis = n.attr_int("axis", 0);
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) fail(n, "axis out of range");
    Tensor out;
    for (std::int64_t i = 0; i < axis; ++i) out.shape.push_back(data.shape[i]);
    out.shape.insert(out.shape.end(), idx.shape.begin(), idx.shape.end());
    for (std::int64_t i = axis + 1; i < rank; ++i) out.shape.push_back(data.shape[i]);
    if (axis == 0 && rank == 1 && data.value && idx.value && out.shape.size() <= 1) {
      std::vector<std::int64_t> v;
      for (auto i : *idx.value) {
        if (i < 0) i += static_cast<std::int64_t>(data.value->size());
        if (i < 0 || i >= static_cast<std::int64_t>(data.value->size()))
          fail(n, "index out of range");
        v.push_back((*data.value)[i]);
      }
      out.value = std::move(v);
    }
    return out;
  }

  Tensor reduce(const Node& n, bool is_sum) {
    const Tensor& in = get(n.inputs[0]);
    std::int64_t rank = static_cast<std::int64_t>(in.shape.size());
    std::vector<std::int64_t> axes = n.attr_ints("axes");
    if (axes.empty() && !n.has_attr("axes")) {
      axes.resize(rank);
      std::iota(axes.begin(), axes.end(), 0);
    }
    for (auto& a : axes) {
      if (a < 0) a += rank;
      if (a < 0 || a >= rank) fail(n, "axis out of range");
    }
    const bool keepdims = n.attr_int("keepdims", 1) != 0;
    Tensor out;
    for (std::int64_t i = 0; i < rank; ++i) {
      bool reduced = std::find(axes.begin(), axes.end(), i) != axes.end();
      if (!reduced) {
        out.shape.push_back(in.shape[i]);
      } else if (keepdims) {
        out.shape.push_back(1);
      }
    }
    if (is_sum && rank == 1 && in.value && out.shape.size() <= 1) {
      std::int64_t s = std::accumulate(in.value->begin(), in.value->end(),
                                       std::int64_t{0});
      out.value = std::vector<std::int64_t>(out.shape.empty() ? 1 : out.shape[0], s);
    }
    return out;
  }

  Tensor transpose(const Node& n) {
    const Tensor& in = get(n.inputs[0]);
    std::vector<std::int64_t> perm = n.attr_ints("perm");
    if (perm.empty()) {
      perm.resize(in.shape.size());
      std::iota(perm.rbegin(), perm.rend(), 0);
    }
    if (perm.size() != in.shape.size()) fail(n, "perm rank mismatch");
    Tensor out;
    for (auto p : perm) {
      if (p < 0) p += static_cast<std::int64_t>(in.shape.size());
      if (p < 0 || p >= static_cast<std::int64_t>(in.shape.size()))
        fail(n, "perm entry out of range");
      out.shape.push_back(in.shape[p]);
    }
    if (in.shape.size() <= 1) out.value = in.value;
    return out;
  }

  Tensor reshape(const Node& n) {
    const Tensor& in = get(n.inputs[0]);
    const Tensor& tgt = get(n.inputs[1]);
    if (!tgt.value) fail(n, "reshape target has no concrete value");
    Tensor out;
    out.shape = *tgt.value;
    std::int64_t total = numel(in.shape);
    int wildcard = -1;
    std::int64_t rest = 1;
    for (std::size_t i = 0; i < out.shape.size(); ++i) {
      if (out.shape[i] == -1) {
        if (wildcard >= 0) fail(n, "multiple -1 entries");
        wildcard = static_cast<int>(i);
      } else {
        rest *= out.shape[i];
      }
    }
    if (wildcard >= 0) {
      if (rest == 0 || total % rest != 0)
        fail(n, "element count not divisible for -1");
      out.shape[wildcard] = total / rest;
    } else if (rest != total) {
      fail(n, "element count changes from " + std::to_string(total) + " to " +
                  std::to_string(rest));
    }
    if (in.value && out.shape.size() <= 1) out.value = in.value;
    return out;
  }

  Tensor slice(const Node& n) {
    const Tensor& in = get(n.inputs[0]);
    std::int64_t rank = static_cast<std::int64_t>(in.shape.size());
    auto vec = [&](int i) -> const std::vector<std::int64_t>& {
      const Tensor& t = get(n.inputs[i]);
      if (!t.value) fail(n, "slice parameter has no concrete value");
      return *t.value;
    };
    const auto& starts = vec(1);
    const auto& ends = vec(2);
    std::vector<std::int64_t> axes;
    if (n.inputs.size() >= 4) {
      axes = vec(3);
    } else {
      axes.resize(starts.size());
      std::iota(axes.begin(), axes.end(), 0);
    }
    std::vector<std::int64_t> steps(axes.size(), 1);
    if (n.inputs.size() >= 5) steps = vec(4);
    if (starts.size() != axes.size() || ends.size() != axes.size() ||
        steps.size() != axes.size())
      fail(n, "slice parameter lengths differ");
    Tensor out;
    out.shape = in.shape;
    std::int64_t s0 = 0, e0 = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      std::int64_t ax = axes[i] < 0 ? axes[i] + rank : axes[i];
      if (ax < 0 || ax >= rank) fail(n, "axis out of range");
      std::int64_t d = in.shape[ax];
      std::int64_t st = steps[i];
      if (st <= 0) fail(n, "only positive slice steps are supported");
      std::int64_t s = starts[i] < 0 ? starts[i] + d : starts[i];
      std::int64_t e = ends[i] < 0 ? ends[i] + d : ends[i];
      s = std::clamp<std::int64_t>(s, 0, d);
      e = std::clamp<std::int64_t>(e, 0, d);
      out.shape[ax] = e > s ? (e - s + st - 1) / st : 0;
      if (ax == 0) {
        s0 = s;
        e0 = std::max(e, s);
      }
    }
    if (rank == 1 && in.value && axes.size() == 1 && steps[0] == 1) {
      out.value = std::vector<std::int64_t>(in.value->begin() + s0,
                                            in.value->begin() + e0);
    }
    return out;
  }

  Tensor expand(const Node& n) {
    const Tensor& in = get(n.inputs[0]);
    const Tensor& tgt = get(n.inputs[1]);
    if (!tgt.value) fail(n, "expand target has no concrete value");
    Tensor out;
    out.shape = broadcast(n, in.shape, *tgt.value);
    return out;
  }

  Tensor range_op(const Node& n) {
    auto scalar = [&](int i) {
      const Tensor& t = get(n.inputs[i]);
      if (!t.value || t.value->size() != 1)
        fail(n, "range parameter is not a concrete scalar");
      return (*t.value)[0];
    };
    std::int64_t start = scalar(0), limit = scalar(1), delta = scalar(2);
    if (delta <= 0) fail(n, "only positive range deltas are supported");
    std::int64_t len = limit > start ? (limit - start + delta - 1) / delta : 0;
    Tensor out;
    out.shape = {len};
    std::vector<std::int64_t> v;
    for (std::int64_t i = 0; i < len; ++i) v.push_back(start + i * delta);
    out.value = std::move(v);
    return out;
  }

  Tensor topk(const Node& n, int out_idx) {
    const Tensor& in = get(n.inputs[0]);
    std::int64_t rank = static_cast<std::int64_t>(in.shape.size());
    std::int64_t axis = n.attr_int("axis", -1);
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) fail(n, "axis out of range");
    const Tensor& kt = get(n.inputs[1]);
    std::int64_t k;
    if (kt.value && kt.value->size() == 1) {
      k = (*kt.value)[0];
    } else {
      auto oc = outcome(n, out_idx,
                        {static_cast<std::int64_t>(pseudo(n, "k") %
                                                   (in.shape[axis] + 1))});
      k = oc.empty() ? 0 : oc[0];
    }
    if (k < 0 || k > in.shape[axis]) fail(n, "k out of range");
    Tensor out;
    out.shape = in.shape;
    out.shape[axis] = k;
    return out;
  }

  Tensor nonzero(const Node& n) {
    const Tensor& in = get(n.inputs[0]);
    std::int64_t rank = static_cast<std::int64_t>(in.shape.size());
    std::int64_t total = numel(in.shape);
    std::int64_t dflt = static_cast<std::int64_t>(
        pseudo(n, "count") %
        (static_cast<std::uint64_t>(std::min<std::int64_t>(total, 64)) + 1));
    // The outcome, supplied or pseudo, is the full output shape [rank, count].
    auto oc = outcome(n, 0, {rank, dflt});
    if (oc.size() != 2 || oc[0] != rank) fail(n, "nonzero outcome is not [rank, count]");
    std::int64_t count = oc[1];
    if (count < 0 || count > total) fail(n, "nonzero count out of range");
    Tensor out;
    out.shape = {rank, count};
    return out;
  }

  Tensor edo_output(const Node& n, int out_idx) {
    Tensor out;
    out.shape = outcome(
        n, out_idx, {static_cast<std::int64_t>(pseudo(n, std::to_string(out_idx)) % 8 + 1)});
    return out;
  }

  // ---- driver --------------------------------------------------------

  void execute(const Node& n) {
    if (n.op == "Switch") {
      int branch = 0;
      auto it = env.branches.find(n.id);
      if (it != env.branches.end()) {
        branch = it->second;
      } else {
        const Tensor& pred = get(n.inputs[0]);
        if (pred.value && !pred.value->empty()) {
          branch = static_cast<int>((*pred.value)[0]);
        } else {
          branch = static_cast<int>(pseudo(n, "branch") % n.outputs.size());
        }
      }
      if (branch < 0 || branch >= static_cast<int>(n.outputs.size()))
        fail(n, "branch index out of range");
      trace.taken[n.id] = branch;
      set(n.outputs[branch], get(n.inputs[1]));
      return;
    }
    if (n.op == "Combine") {
      int found = -1;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        if (tensors.count(n.inputs[i])) {
          if (found >= 0) fail(n, "more than one branch reached the merge");
          found = static_cast<int>(i);
        }
      }
      if (found < 0) fail(n, "no branch reached the merge");
      set(n.outputs[0], get(n.inputs[found]));
      return;
    }
    if (n.opaque || n.op == "Loop" || n.op == "NMS" || n.op == "If") {
      for (std::size_t o = 0; o < n.outputs.size(); ++o)
        set(n.outputs[o], edo_output(n, static_cast<int>(o)));
      return;
    }
    Tensor out;
    if (n.op == "Shape") {
      out.shape = {static_cast<std::int64_t>(get(n.inputs[0]).shape.size())};
      out.value = get(n.inputs[0]).shape;
    } else if (n.op == "ConstantOfShape") {
      const Tensor& t = get(n.inputs[0]);
      if (!t.value) fail(n, "shape operand has no concrete value");
      out.shape = *t.value;
      if (out.shape.size() <= 1)
        out.value = std::vector<std::int64_t>(numel(out.shape),
                                              n.attr_int("value", 0));
    } else if (n.op == "EyeLike" || n.op == "Relu" || n.op == "Sigmoid" ||
               n.op == "Softmax") {
      out.shape = get(n.inputs[0]).shape;
    } else if (n.op == "Cast") {
      out.shape = get(n.inputs[0]).shape;
      out.value = get(n.inputs[0]).value;
    } else if (n.op == "Add" || n.op == "Mul") {
      out = elementwise(n, n.op == "Mul");
    } else if (n.op == "Concat") {
      out = concat(n);
    } else if (n.op == "Conv") {
      out = conv_pool(n, true);
    } else if (n.op == "MaxPool" || n.op == "AveragePool") {
      out = conv_pool(n, false);
    } else if (n.op == "MatMul") {
      out = matmul(n);
    } else if (n.op == "Gather") {
      out = gather(n);
    } else if (n.op == "ReduceSum" || n.op == "ReduceMean") {
      out = reduce(n, n.op == "ReduceSum");
    } else if (n.op == "Transpose") {
      out = transpose(n);
    } else if (n.op == "Reshape") {
      out = reshape(n);
    } else if (n.op == "Slice") {
      out = slice(n);
    } else if (n.op == "Expand") {
      out = expand(n);
    } else if (n.op == "Range") {
      out = range_op(n);
    } else if (n.op == "Resize") {
      const Tensor& t = get(n.inputs[1]);
      if (!t.value) fail(n, "sizes operand has no concrete value");
      if (t.value->size() != get(n.inputs[0]).shape.size())
        fail(n, "sizes rank mismatch");
      out.shape = *t.value;
    } else if (n.op == "TopK") {
      Tensor vals = topk(n, 0);
      for (std::size_t o = 0; o < n.outputs.size(); ++o) set(n.outputs[o], vals);
      return;
    } else if (n.op == "NonZero") {
      out = nonzero(n);
    } else {
      fail(n, "no concrete semantics for this operator");
    }
    set(n.outputs[0], std::move(out));
  }
};

}  // namespace

Trace interpret(const Graph& g, const ConcreteEnv& env,
                const std::vector<std::string>* order) {
  Machine m(g, env);
  m.seed_graph_io();
  std::vector<int> schedule;
  if (order) {
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      by_id[g.nodes[i].id] = static_cast<int>(i);
    for (const auto& id : *order) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw Error(Error::Kind::Input, "order names unknown node " + id);
      schedule.push_back(it->second);
    }
    if (schedule.size() != g.nodes.size())
      throw Error(Error::Kind::Input, "order does not cover every node");
  } else {
    schedule = g.topo_order();
  }
  for (int ni : schedule) {
    const Node& n = g.nodes[ni];
    bool ready = true;
    for (const auto& t : n.inputs) {
      if (!m.tensors.count(t)) ready = false;
    }
    if (n.op == "Combine") {
      // Runs as long as some branch delivered (exactly-one checked inside).
      ready = false;
      for (const auto& t : n.inputs) {
        if (m.tensors.count(t)) ready = true;
      }
    }
    if (!ready) continue;  // gated off by an untaken Switch branch
    m.execute(n);
    m.trace.executed.push_back(n.id);
  }
  for (const auto& t : g.outputs) {
    if (!m.tensors.count(t))
      throw Error(Error::Kind::Analysis, "graph output " + t + " was never produced");
  }

  // Liveness with the planner's convention: one step per executed node.
  Trace& tr = m.trace;
  std::map<std::string, std::int64_t> sizes = trace_sizes(g, tr);
  std::vector<std::vector<std::string>> steps;
  for (const auto& id : tr.executed) steps.push_back({id});
  std::vector<Lifetime> lts = lifetimes(steps, g, sizes);
  tr.live_bytes.assign(tr.executed.size(), 0);
  for (const auto& l : lts) {
    for (int s = l.birth; s <= l.death && s < static_cast<int>(tr.live_bytes.size());
         ++s)
      tr.live_bytes[s] += l.size;
  }
  for (auto b : tr.live_bytes) tr.peak = std::max(tr.peak, b);
  return tr;
}

std::map<std::string, std::int64_t> trace_sizes(const Graph& g, const Trace& trace) {
  std::map<std::string, DType> dtypes = infer_dtypes(g);
  std::map<std::string, std::int64_t> sizes;
  for (const auto& n : g.nodes) {
    for (const auto& t : n.outputs) {
      auto it = trace.shapes.find(t);
      if (it == trace.shapes.end()) continue;
      std::int64_t bytes = dtype_size(dtypes.at(t));
      for (auto d : it->second) bytes *= d;
      sizes[t] = bytes;
    }
  }
  return sizes;
}

CheckReport check_plan(const Graph& g, const ConcreteEnv& env, const ExecPlan& exec,
                       const MemPlan& mem) {
  CheckReport rep;
  auto flag = [&](const std::string& v) {
    rep.ok = false;
    rep.violations.push_back(v);
  };

  // (a) the global order is topological.
  std::map<std::string, int> pos;
  for (std::size_t i = 0; i < exec.global_order.size(); ++i)
    pos[exec.global_order[i]] = static_cast<int>(i);
  if (pos.size() != g.nodes.size()) flag("order does not cover every node exactly once");
  for (const auto& n : g.nodes) {
    for (const auto& t : n.inputs) {
      const Producer& p = g.producer(t);
      if (p.kind != Producer::Kind::NodeOutput) continue;
      if (!pos.count(n.id) || !pos.count(g.nodes[p.index].id)) continue;
      if (pos[g.nodes[p.index].id] >= pos[n.id])
        flag("order places " + n.id + " before its producer " + g.nodes[p.index].id);
    }
  }
  if (!rep.ok) return rep;

  Trace tr = interpret(g, env, &exec.global_order);
  std::map<std::string, std::int64_t> sizes = trace_sizes(g, tr);
  std::set<std::string> executed(tr.executed.begin(), tr.executed.end());

  // (b) non-heuristic subgraph peaks match under substitution.
  for (const auto& sp : exec.subgraphs) {
    if (sp.method == OrderMethod::Heuristic || !sp.peak) continue;
    // Skip gated subgraphs: the planned peak assumes every member tensor
    // materializes, but an untaken branch (or gate output) never does.
    std::map<std::string, const Node*> node_of;
    for (const auto& n : g.nodes) node_of[n.id] = &n;
    bool all_run = true;
    for (const auto& id : sp.members) {
      if (!executed.count(id)) all_run = false;
      for (const auto& t : node_of.at(id)->outputs)
        if (!sizes.count(t)) all_run = false;
    }
    if (!all_run) continue;
    bool bound = true;
    for (const auto& s : sp.peak->symbols()) {
      if (!env.symbols.count(s)) bound = false;
    }
    if (!bound) continue;
    std::int64_t planned = sp.peak->evaluate(env.symbols);
    std::vector<Lifetime> lts = lifetimes(sp.order, g, sizes);
    std::int64_t actual = peak_live_bytes(lts);
    if (planned != actual)
      flag("subgraph " + std::to_string(sp.id) + ": planned peak " +
           std::to_string(planned) + " != actual " + std::to_string(actual));
  }

  // (c)/(d) the memory plan against actual lifetimes.
  std::vector<std::string> run_order;
  for (const auto& id : exec.global_order) {
    if (executed.count(id)) run_order.push_back(id);
  }
  std::vector<Lifetime> actual = lifetimes(run_order, g, sizes);
  std::map<std::string, Lifetime> by_name;
  for (const auto& l : actual) by_name[l.tensor] = l;
  std::vector<Placement> live_placed;
  for (const auto& p : mem.placements) {
    auto it = by_name.find(p.lifetime.tensor);
    if (it == by_name.end()) continue;  // not materialized this run
    live_placed.push_back({it->second, p.offset});
    if (p.offset + it->second.size > mem.arena)
      flag("tensor " + p.lifetime.tensor + " exceeds the arena");
  }
  for (std::size_t i = 0; i < live_placed.size(); ++i) {
    for (std::size_t j = i + 1; j < live_placed.size(); ++j) {
      const Placement& a = live_placed[i];
      const Placement& b = live_placed[j];
      if (a.lifetime.birth <= b.lifetime.death && b.lifetime.birth <= a.lifetime.death &&
          a.offset < b.offset + b.lifetime.size && b.offset < a.offset + a.lifetime.size)
        flag("tensors " + a.lifetime.tensor + " and " + b.lifetime.tensor +
             " overlap in time and address");
    }
  }
  std::vector<Lifetime> planned_lts;
  for (const auto& p : live_placed) planned_lts.push_back(p.lifetime);
  if (mem.arena < peak_live_bytes(planned_lts))
    flag("arena smaller than the concurrent-live lower bound");
  return rep;
}

}  // namespace dyndag
