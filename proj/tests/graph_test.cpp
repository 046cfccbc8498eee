// SPDX-License-Identifier: Apache-2.0
//
// Structural tests for graph loading, validation, and traversal.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dyndag/graph.hpp>

#include <algorithm>
#include <filesystem>

using namespace dyndag;
using nlohmann::ordered_json;

namespace {

std::string graph_path(const std::string& name) {
  return std::string(DYNDAG_GRAPH_DIR) + "/" + name;
}

ordered_json minimal() {
  return ordered_json::parse(R"({
    "name": "t",
    "symbols": ["N"],
    "inputs": [{"name": "x", "dtype": "f32", "shape": ["N", 4]}],
    "constants": [],
    "nodes": [
      {"id": "a", "op": "Relu", "inputs": ["x"], "outputs": ["t0"]},
      {"id": "b", "op": "Sigmoid", "inputs": ["t0"], "outputs": ["y"]}
    ],
    "outputs": ["y"]
  })");
}

}  // namespace

TEST_CASE("all bundled graphs load and validate") {
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(DYNDAG_GRAPH_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    Graph g = Graph::load(e.path().string());
    CHECK(!g.nodes.empty());
    CHECK(g.validate_switch_combine().empty());
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("json round-trip") {
  Graph g = Graph::load(graph_path("bert_block.json"));
  Graph h = Graph::from_json(g.to_json());
  CHECK(h.to_json() == g.to_json());
  CHECK(h.nodes.size() == g.nodes.size());
}

TEST_CASE("dtypes") {
  CHECK(dtype_size(DType::F32) == 4);
  CHECK(dtype_size(DType::F16) == 2);
  CHECK(dtype_size(DType::I64) == 8);
  CHECK(dtype_size(DType::I32) == 4);
  CHECK(dtype_size(DType::Bool) == 1);
  CHECK(dtype_parse("f32") == DType::F32);
  CHECK(dtype_name(DType::I64) == "i64");
  CHECK_THROWS_AS(dtype_parse("f64"), Error);
}

TEST_CASE("undeclared symbol rejected") {
  ordered_json j = minimal();
  j["inputs"][0]["shape"][0] = "Q";
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("non-positive dimension rejected") {
  ordered_json j = minimal();
  j["inputs"][0]["shape"][1] = 0;
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("unknown op rejected") {
  ordered_json j = minimal();
  j["nodes"][0]["op"] = "Frobnicate";
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("unknown attribute rejected") {
  ordered_json j = minimal();
  j["nodes"][0]["attrs"] = {{"bogus", 1}};
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("dangling input tensor rejected") {
  ordered_json j = minimal();
  j["nodes"][1]["inputs"][0] = "missing";
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("duplicate tensor name rejected") {
  ordered_json j = minimal();
  j["nodes"][1]["outputs"][0] = "t0";
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("cycle rejected") {
  ordered_json j = minimal();
  j["nodes"][0]["inputs"][0] = "y";
  CHECK_THROWS_AS(Graph::from_json(j), Error);
}

TEST_CASE("topological order is deterministic and valid") {
  Graph g = Graph::load(graph_path("bert_block.json"));
  auto topo = g.topo_order();
  CHECK(topo.size() == g.nodes.size());
  std::vector<int> pos(g.nodes.size());
  for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (const auto& t : g.nodes[i].inputs) {
      const Producer& p = g.producer(t);
      if (p.kind == Producer::Kind::NodeOutput)
        CHECK(pos[p.index] < pos[static_cast<int>(i)]);
    }
  }
  CHECK(g.topo_order() == topo);
}

TEST_CASE("producer and consumer indices") {
  Graph g = Graph::from_json(minimal());
  CHECK(g.producer("x").kind == Producer::Kind::Input);
  CHECK(g.producer("t0").kind == Producer::Kind::NodeOutput);
  CHECK(g.producer("t0").index == 0);
  CHECK(g.consumers("t0") == std::vector<int>{1});
  CHECK(g.is_graph_output("y"));
  CHECK_FALSE(g.is_graph_output("t0"));
  CHECK(g.find_constant("x") == nullptr);
}

TEST_CASE("reachability") {
  Graph g = Graph::from_json(minimal());
  auto r = g.reachable_from(0);
  CHECK(r[1]);
  CHECK_FALSE(g.reachable_from(1)[0]);
}

TEST_CASE("switch/combine structural diagnostics") {
  Graph ok = Graph::load(graph_path("switch_graph.json"));
  CHECK(ok.validate_switch_combine().empty());

  // A Combine whose inputs do not come from any Switch gate is flagged.
  ordered_json j = minimal();
  j["nodes"][1]["op"] = "Combine";
  Graph bad = Graph::from_json(j);
  CHECK_FALSE(bad.validate_switch_combine().empty());
}
