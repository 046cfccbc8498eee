// SPDX-License-Identifier: Apache-2.0
//
// Operator registry tests: classification, forward/backward transfer
// functions over the shape and value lattices, and dtype inference.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dyndag/ops.hpp>

using namespace dyndag;
using nlohmann::ordered_json;

namespace {

DimValue K(std::int64_t v) { return DimValue::known(v); }
DimValue S(const std::string& n) { return DimValue::sym(n); }

ShapeInfo sh(std::vector<DimValue> d) { return ShapeInfo::ranked(std::move(d)); }

// One-node graph harness: builds {inputs} -> node -> outputs.
struct Harness {
  Graph g;
  Node* node;

  Harness(const std::string& op, int n_inputs, ordered_json attrs = ordered_json::object(),
          int n_outputs = 1) {
    g.name = "h";
    for (int i = 0; i < n_inputs; ++i)
      g.inputs.push_back({"in" + std::to_string(i), DType::F32, {DimValue::known(1)}});
    Node n;
    n.id = "n";
    n.op = op;
    for (int i = 0; i < n_inputs; ++i) n.inputs.push_back("in" + std::to_string(i));
    for (int i = 0; i < n_outputs; ++i) n.outputs.push_back("out" + std::to_string(i));
    n.attrs = std::move(attrs);
    g.nodes.push_back(std::move(n));
    g.outputs = g.nodes[0].outputs;
    g.validate();
    node = &g.nodes[0];
  }

  TransferResult fwd(const std::vector<ShapeInfo>& s,
                     std::vector<ValueInfo> v = {}) {
    if (v.empty()) v.assign(s.size(), ValueInfo::nac());
    return forward_transfer(g, *node, s, v);
  }
};

}  // namespace

TEST_CASE("catalog completeness") {
  CHECK(find_op("Conv") != nullptr);
  CHECK(find_op("Nope") == nullptr);
  for (const auto& op : catalog()) {
    CHECK(!op.name.empty());
    CHECK(op.min_arity >= 1);
    if (op.base_class == DynClass::ISVDOS) CHECK(!op.shape_input_indices.empty());
  }
  CHECK(dynclass_name(DynClass::ISVDOS) == "ISVDOS");
}

TEST_CASE("classification downgrades value-dependent ops fed by payload constants") {
  Graph g;
  g.name = "c";
  g.symbols = {"N"};
  g.inputs.push_back({"x", DType::F32, {S("N"), K(12)}});
  g.constants.push_back({"t", DType::I64, {2}, std::vector<std::int64_t>{3, 4}});
  g.constants.push_back({"u", DType::I64, {2}, std::nullopt});
  Node a{"a", "Reshape", {"x", "t"}, {"y"}, ordered_json::object(), false};
  Node b{"b", "Reshape", {"x", "u"}, {"z"}, ordered_json::object(), false};
  g.nodes = {a, b};
  g.outputs = {"y", "z"};
  g.validate();
  CHECK(classify(g, g.nodes[0]) == DynClass::ISDOS);   // payload known statically
  CHECK(classify(g, g.nodes[1]) == DynClass::ISVDOS);  // constant without payload
  g.nodes[0].opaque = true;
  CHECK(classify(g, g.nodes[0]) == DynClass::EDO);
}

TEST_CASE("broadcast add") {
  Harness h("Add", 2);
  auto r = h.fwd({sh({K(4), K(1), K(16)}), sh({K(4), K(8), K(16)})});
  CHECK(r.shapes[0] == sh({K(4), K(8), K(16)}));

  // rank extension
  r = h.fwd({sh({K(3), K(5)}), sh({K(5)})});
  CHECK(r.shapes[0] == sh({K(3), K(5)}));

  // symbolic vs 1 resolves to the symbol
  r = h.fwd({sh({S("N"), K(1)}), sh({K(1), K(7)})});
  CHECK(r.shapes[0] == sh({S("N"), K(7)}));

  // two distinct symbols: statically unknowable dim
  r = h.fwd({sh({S("N")}), sh({S("M")})});
  CHECK(r.shapes[0].dims[0].is_nac());

  // hard conflict is a contradiction
  CHECK_THROWS_AS(h.fwd({sh({K(4)}), sh({K(5)})}), Error);
}

TEST_CASE("matmul") {
  Harness h("MatMul", 2);
  auto r = h.fwd({sh({K(3), K(5)}), sh({K(5), K(7)})});
  CHECK(r.shapes[0] == sh({K(3), K(7)}));

  // batched with symbolic batch
  r = h.fwd({sh({S("B"), K(3), K(5)}), sh({K(5), K(7)})});
  CHECK(r.shapes[0] == sh({S("B"), K(3), K(7)}));

  // inner-dim mismatch is a contradiction
  CHECK_THROWS_AS(h.fwd({sh({K(3), K(5)}), sh({K(4), K(7)})}), Error);
}

TEST_CASE("conv and pooling arithmetic") {
  Harness conv("Conv", 2, {{"strides", {2, 2}}, {"pads", {3, 3, 3, 3}}, {"kernel_shape", {7, 7}}});
  auto r = conv.fwd({sh({K(1), K(3), K(224), K(224)}), sh({K(64), K(3), K(7), K(7)})});
  CHECK(r.shapes[0] == sh({K(1), K(64), K(112), K(112)}));

  Harness pool("MaxPool", 1, {{"kernel_shape", {3, 3}}, {"strides", {2, 2}}, {"pads", {1, 1, 1, 1}}});
  r = pool.fwd({sh({K(1), K(64), K(112), K(112)})});
  CHECK(r.shapes[0] == sh({K(1), K(64), K(56), K(56)}));

  Harness avg("AveragePool", 1, {{"kernel_shape", {2, 2}}, {"strides", {2, 2}}, {"pads", {0, 0, 0, 0}}});
  r = avg.fwd({sh({K(2), K(8), K(10), K(10)})});
  CHECK(r.shapes[0] == sh({K(2), K(8), K(5), K(5)}));
}

TEST_CASE("shape produces a tracked value") {
  Harness h("Shape", 1);
  auto r = h.fwd({sh({S("N"), K(3), S("H")})});
  CHECK(r.shapes[0] == sh({K(3)}));
  REQUIRE(r.values[0].is_tracked());
  CHECK(r.values[0].elems == std::vector<DimValue>{S("N"), K(3), S("H")});
}

TEST_CASE("reshape with tracked target") {
  Harness h("Reshape", 2);
  // explicit target
  auto r = h.fwd({sh({K(2), K(12)}), sh({K(3)})},
                 {ValueInfo::nac(), ValueInfo::tracked({K(2), K(3), K(4)})});
  CHECK(r.shapes[0] == sh({K(2), K(3), K(4)}));

  // -1 wildcard with known remainder
  r = h.fwd({sh({K(2), K(12)}), sh({K(2)})},
            {ValueInfo::nac(), ValueInfo::tracked({K(4), K(-1)})});
  CHECK(r.shapes[0] == sh({K(4), K(6)}));

  // -1 wildcard with symbolic element count: exact division by known dims
  r = h.fwd({sh({S("N"), K(12)}), sh({K(2)})},
            {ValueInfo::nac(), ValueInfo::tracked({S("N"), K(-1)})});
  CHECK(r.shapes[0] == sh({S("N"), K(12)}));

  // unknown target value: rank known from the target tensor's length
  r = h.fwd({sh({K(2), K(12)}), sh({K(3)})}, {ValueInfo::nac(), ValueInfo::nac()});
  REQUIRE(r.shapes[0].is_ranked());
  CHECK(r.shapes[0].dims.size() == 3);
  CHECK(r.shapes[0].dims[0].is_nac());
}

TEST_CASE("concat") {
  Harness h("Concat", 2, {{"axis", 1}});
  auto r = h.fwd({sh({K(2), K(3)}), sh({K(2), K(5)})});
  CHECK(r.shapes[0] == sh({K(2), K(8)}));

  // concat of tracked 1-D values concatenates values too
  Harness hv("Concat", 2, {{"axis", 0}});
  auto rv = hv.fwd({sh({K(1)}), sh({K(1)})},
                   {ValueInfo::tracked({S("N")}), ValueInfo::tracked({K(-1)})});
  CHECK(rv.shapes[0] == sh({K(2)}));
  REQUIRE(rv.values[0].is_tracked());
  CHECK(rv.values[0].elems == std::vector<DimValue>{S("N"), K(-1)});
}

TEST_CASE("gather over a tracked vector") {
  Harness h("Gather", 2, {{"axis", 0}});
  auto r = h.fwd({sh({K(4)}), sh({K(1)})},
                 {ValueInfo::tracked({S("N"), K(3), S("H"), S("W")}),
                  ValueInfo::tracked({K(0)})});
  CHECK(r.shapes[0] == sh({K(1)}));
  REQUIRE(r.values[0].is_tracked());
  CHECK(r.values[0].elems == std::vector<DimValue>{S("N")});
}

TEST_CASE("reduce") {
  Harness h("ReduceSum", 1, {{"axes", {1}}, {"keepdims", 1}});
  auto r = h.fwd({sh({S("N"), K(128)})});
  CHECK(r.shapes[0] == sh({S("N"), K(1)}));

  Harness h2("ReduceMean", 1, {{"axes", {0, 1}}, {"keepdims", 0}});
  r = h2.fwd({sh({S("N"), K(128)})});
  CHECK(r.shapes[0] == sh({}));
}

TEST_CASE("transpose") {
  Harness h("Transpose", 1, {{"perm", {0, 2, 1}}});
  auto r = h.fwd({sh({S("B"), S("S"), K(256)})});
  CHECK(r.shapes[0] == sh({S("B"), K(256), S("S")}));
}

TEST_CASE("slice clamps to the input extent") {
  Harness h("Slice", 4);
  auto r = h.fwd({sh({K(10), K(4)}), sh({K(1)}), sh({K(1)}), sh({K(1)})},
                 {ValueInfo::nac(), ValueInfo::tracked({K(2)}),
                  ValueInfo::tracked({K(100)}), ValueInfo::tracked({K(0)})});
  CHECK(r.shapes[0] == sh({K(8), K(4)}));
}

TEST_CASE("range length") {
  Harness h("Range", 3);
  auto r = h.fwd({sh({}), sh({}), sh({})},
                 {ValueInfo::tracked({K(0)}), ValueInfo::tracked({K(8)}),
                  ValueInfo::tracked({K(1)})});
  CHECK(r.shapes[0] == sh({K(8)}));
  REQUIRE(r.values[0].is_tracked());
  CHECK(r.values[0].elems.size() == 8);
  CHECK(r.values[0].elems[5] == K(5));

  // ceil-division length: (7 - 0 + 2) / 3 = 3
  r = h.fwd({sh({}), sh({}), sh({})},
            {ValueInfo::tracked({K(0)}), ValueInfo::tracked({K(7)}),
             ValueInfo::tracked({K(3)})});
  CHECK(r.shapes[0] == sh({K(3)}));
}

TEST_CASE("expand broadcasts to a tracked target") {
  Harness h("Expand", 2);
  auto r = h.fwd({sh({K(1), K(4)}), sh({K(2)})},
                 {ValueInfo::nac(), ValueInfo::tracked({K(3), K(4)})});
  CHECK(r.shapes[0] == sh({K(3), K(4)}));
}

TEST_CASE("nonzero output is rank x unknowable-count") {
  Harness h("NonZero", 1);
  auto r = h.fwd({sh({K(5), K(7)})});
  REQUIRE(r.shapes[0].is_ranked());
  CHECK(r.shapes[0].dims[0] == K(2));
  CHECK(r.shapes[0].dims[1].is_nac());
  CHECK(r.values[0].is_nac());
}

TEST_CASE("topk with a tracked k") {
  Harness h("TopK", 2, {{"axis", -1}}, 2);
  auto r = h.fwd({sh({S("N"), K(50)}), sh({K(1)})},
                 {ValueInfo::nac(), ValueInfo::tracked({K(5)})});
  CHECK(r.shapes[0] == sh({S("N"), K(5)}));
  CHECK(r.shapes[1] == sh({S("N"), K(5)}));

  // unknown k: the sliced axis becomes unknowable
  r = h.fwd({sh({S("N"), K(50)}), sh({K(1)})},
            {ValueInfo::nac(), ValueInfo::nac()});
  CHECK(r.shapes[0].dims[1].is_nac());
}

TEST_CASE("switch and combine") {
  Harness h("Switch", 2, ordered_json::object(), 2);
  auto r = h.fwd({sh({K(1)}), sh({S("N"), K(64)})});
  CHECK(r.shapes[0] == sh({S("N"), K(64)}));
  CHECK(r.shapes[1] == sh({S("N"), K(64)}));

  Harness c("Combine", 2);
  r = c.fwd({sh({S("N"), K(64)}), sh({S("N"), K(64)})});
  CHECK(r.shapes[0] == sh({S("N"), K(64)}));

  // branches with different known dims merge to unknowable
  r = c.fwd({sh({K(3), K(64)}), sh({K(5), K(64)})});
  CHECK(r.shapes[0].dims[0].is_nac());
  CHECK(r.shapes[0].dims[1] == K(64));
}

TEST_CASE("undef inputs stay undef") {
  Harness h("Relu", 1);
  auto r = h.fwd({ShapeInfo::undef()});
  CHECK(r.shapes[0].is_undef());
}

TEST_CASE("backward shape refines only undef entries") {
  Harness h("Relu", 1);
  auto out = sh({K(3), K(4)});
  auto refined = backward_shape(h.g, *h.node, {out}, {ShapeInfo::undef()});
  CHECK(refined[0] == out);

  // an already-ranked input is untouched, even where dims differ in kind
  auto in = sh({S("N"), DimValue::undef()});
  refined = backward_shape(h.g, *h.node, {out}, {in});
  CHECK(refined[0].dims[0] == S("N"));
  CHECK(refined[0].dims[1] == K(4));
}

TEST_CASE("backward through transpose inverts the permutation") {
  Harness h("Transpose", 1, {{"perm", {1, 0}}});
  auto refined = backward_shape(h.g, *h.node, {sh({K(7), K(3)})}, {ShapeInfo::undef()});
  CHECK(refined[0] == sh({K(3), K(7)}));
}

TEST_CASE("backward value through shape pins the input rank") {
  Harness h("Shape", 1);
  auto refined = backward_value(h.g, *h.node, {ValueInfo::tracked({K(2), S("N")})},
                                {ShapeInfo::undef()});
  CHECK(refined[0] == sh({K(2), S("N")}));
}

TEST_CASE("dtype inference") {
  Graph g;
  g.name = "d";
  g.symbols = {"N"};
  g.inputs.push_back({"x", DType::F32, {S("N"), K(4)}});
  Node s{"s", "Shape", {"x"}, {"xs"}, ordered_json::object(), false};
  Node c{"c", "Cast", {"x"}, {"xc"}, ordered_json{{"to", "i32"}}, false};
  Node r{"r", "Relu", {"xc"}, {"y"}, ordered_json::object(), false};
  g.nodes = {s, c, r};
  g.outputs = {"xs", "y"};
  g.validate();
  auto dt = infer_dtypes(g);
  CHECK(dt.at("x") == DType::F32);
  CHECK(dt.at("xs") == DType::I64);
  CHECK(dt.at("xc") == DType::I32);
  CHECK(dt.at("y") == DType::I32);
}
