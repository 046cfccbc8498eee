// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the analysis and planning hot paths.

#include <benchmark/benchmark.h>

#include <dyndag/exec.hpp>
#include <dyndag/fusion.hpp>
#include <dyndag/interp.hpp>
#include <dyndag/mem.hpp>
#include <dyndag/rdp.hpp>

#include <numeric>
#include <random>

using namespace dyndag;

namespace {

// Deep elementwise chain with periodic shape/value plumbing, sized by `n`.
Graph make_chain(int n) {
  Graph g;
  g.name = "bench";
  g.symbols = {"N"};
  g.inputs.push_back({"x", DType::F32, {DimValue::sym("N"), DimValue::known(64)}});
  std::string cur = "x";
  for (int i = 0; i < n; ++i) {
    Node node;
    node.id = "n" + std::to_string(i);
    node.outputs = {"t" + std::to_string(i)};
    switch (i % 4) {
      case 0: node.op = "Relu"; node.inputs = {cur}; break;
      case 1: node.op = "Sigmoid"; node.inputs = {cur}; break;
      case 2: node.op = "Add"; node.inputs = {cur, cur}; break;
      default: node.op = "Mul"; node.inputs = {cur, cur}; break;
    }
    cur = node.outputs[0];
    g.nodes.push_back(std::move(node));
  }
  g.outputs = {cur};
  g.validate();
  return g;
}

std::vector<Lifetime> make_lifetimes(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<Lifetime> lts;
  for (int i = 0; i < n; ++i) {
    int b = static_cast<int>(rng() % (2 * n));
    lts.push_back({"t" + std::to_string(i), 64 * (1 + static_cast<std::int64_t>(rng() % 64)),
                   b, b + static_cast<int>(rng() % 8)});
  }
  return lts;
}

void bm_rdp(benchmark::State& state) {
  Graph g = make_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    RdpResult r = run_rdp(g);
    benchmark::DoNotOptimize(r.iterations);
  }
}

void bm_fusion(benchmark::State& state) {
  Graph g = make_chain(static_cast<int>(state.range(0)));
  RdpResult r = run_rdp(g);
  for (auto _ : state) {
    FusionPlan p = build_plan(g, r);
    benchmark::DoNotOptimize(p.layers_after);
  }
}

void bm_exec_plan(benchmark::State& state) {
  Graph g = make_chain(static_cast<int>(state.range(0)));
  RdpResult r = run_rdp(g);
  for (auto _ : state) {
    ExecPlan p = build_exec_plan(g, r);
    benchmark::DoNotOptimize(p.global_order.size());
  }
}

void bm_mem_from_peak(benchmark::State& state) {
  auto lts = make_lifetimes(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    MemPlan p = plan_from_peak(lts);
    benchmark::DoNotOptimize(p.arena);
  }
}

void bm_mem_best_fit(benchmark::State& state) {
  auto lts = make_lifetimes(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    MemPlan p = plan_best_fit(lts);
    benchmark::DoNotOptimize(p.arena);
  }
}

void bm_mem_oracle(benchmark::State& state) {
  auto lts = make_lifetimes(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    MemPlan p = plan_optimal(lts);
    benchmark::DoNotOptimize(p.arena);
  }
}

void bm_interpret(benchmark::State& state) {
  Graph g = make_chain(static_cast<int>(state.range(0)));
  ConcreteEnv env;
  env.symbols = {{"N", 16}};
  for (auto _ : state) {
    Trace t = interpret(g, env);
    benchmark::DoNotOptimize(t.peak);
  }
}

}  // namespace

BENCHMARK(bm_rdp)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_fusion)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_exec_plan)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_mem_from_peak)->Arg(16)->Arg(128)->Arg(1024);
BENCHMARK(bm_mem_best_fit)->Arg(16)->Arg(128)->Arg(1024);
BENCHMARK(bm_mem_oracle)->Arg(6)->Arg(8)->Arg(10);
BENCHMARK(bm_interpret)->Arg(16)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
