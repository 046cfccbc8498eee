// SPDX-License-Identifier: Apache-2.0
//
// dyndag: analyze dynamic-shape graphs and plan fusion, execution order and
// arena memory, with a concrete interpreter to validate every plan.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyndag/exec.hpp"
#include "dyndag/fusion.hpp"
#include "dyndag/interp.hpp"
#include "dyndag/mem.hpp"
#include "dyndag/rdp.hpp"

using nlohmann::ordered_json;
using namespace dyndag;

namespace {

constexpr const char* kSchema = "dyndag/1";

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Input: return 2;
    case Error::Kind::Analysis: return 3;
    case Error::Kind::PlanCheck: return 4;
    case Error::Kind::Internal: return 1;
  }
  return 1;
}

std::map<std::string, std::int64_t> parse_env(const std::vector<std::string>& specs) {
  std::map<std::string, std::int64_t> env;
  for (const auto& spec : specs) {
    std::size_t start = 0;
    while (start <= spec.size()) {
      std::size_t comma = spec.find(',', start);
      std::string item = spec.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) {
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
          throw Error(Error::Kind::Input, "bad binding '" + item + "', want name=value");
        env[item.substr(0, eq)] = std::stoll(item.substr(eq + 1));
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return env;
}

std::map<std::string, std::vector<std::int64_t>> parse_payloads(
    const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<std::int64_t>> out;
  for (const auto& spec : specs) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw Error(Error::Kind::Input, "bad payload '" + spec + "', want name=v1,v2,...");
    std::vector<std::int64_t> vals;
    std::string rest = spec.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      std::string item = rest.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) vals.push_back(std::stoll(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    out[spec.substr(0, eq)] = std::move(vals);
  }
  return out;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream f(path);
  if (!f) throw Error(Error::Kind::Input, "cannot write " + path);
  f << j.dump(2) << "\n";
}

ordered_json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Error::Kind::Input, "cannot read " + path);
  try {
    return ordered_json::parse(f);
  } catch (const ordered_json::parse_error& e) {
    throw Error(Error::Kind::Input, path + ": " + e.what());
  }
}

// ---- JSON views of the core structures --------------------------------

ordered_json analysis_json(const Graph& g, const RdpResult& r) {
  ordered_json tensors = ordered_json::object();
  for (const auto& [t, sh] : r.shapes) {
    ordered_json e;
    e["shape"] = sh.render();
    e["value"] = r.values.at(t).render();
    tensors[t] = e;
  }
  ordered_json classes = ordered_json::object();
  for (const auto& n : g.nodes) classes[n.id] = dynclass_name(r.node_class.at(n.id));
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "analysis";
  j["graph"] = g.name;
  j["iterations"] = r.iterations;
  j["tensors"] = tensors;
  j["classes"] = classes;
  j["nac_nodes"] = std::vector<std::string>(r.nac_nodes.begin(), r.nac_nodes.end());
  return j;
}

ordered_json fusion_json(const Graph& g, const FusionPlan& p) {
  ordered_json groups = ordered_json::array();
  for (const auto& grp : p.groups) {
    ordered_json jg;
    jg["members"] = grp.members;
    jg["inputs"] = grp.inputs;
    jg["outputs"] = grp.outputs;
    jg["versions"] = grp.versions;
    ordered_json res = ordered_json::array();
    for (const auto& r : grp.resolution) {
      res.push_back({{"consumer", r.consumer},
                     {"dim", r.dim},
                     {"status", dim_status_name(r.status)}});
    }
    jg["resolution"] = res;
    jg["bytes_eliminated"] = grp.bytes_eliminated.render();
    groups.push_back(jg);
  }
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "fusion-plan";
  j["graph"] = g.name;
  j["layers_before"] = p.layers_before;
  j["layers_after"] = p.layers_after;
  j["bytes_eliminated"] = p.bytes_eliminated.render();
  j["groups"] = groups;
  j["singletons"] = p.singletons;
  return j;
}

ordered_json exec_json(const Graph& g, const ExecPlan& p) {
  ordered_json subs = ordered_json::array();
  for (const auto& sp : p.subgraphs) {
    ordered_json js;
    js["id"] = sp.id;
    js["members"] = sp.members;
    js["category"] = category_name(sp.category);
    js["method"] = method_name(sp.method);
    js["order"] = sp.order;
    if (sp.peak) {
      js["peak"] = sp.peak->render();
    } else {
      js["peak"] = nullptr;
    }
    subs.push_back(js);
  }
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "exec-plan";
  j["graph"] = g.name;
  j["global_order"] = p.global_order;
  j["boundary_tensors"] = p.boundary_tensors;
  j["subgraphs"] = subs;
  return j;
}

ExecPlan exec_from_json(const ordered_json& j) {
  if (!j.contains("kind") || j.at("kind") != "exec-plan")
    throw Error(Error::Kind::Input, "not an exec-plan file");
  ExecPlan p;
  p.global_order = j.at("global_order").get<std::vector<std::string>>();
  p.boundary_tensors = j.at("boundary_tensors").get<std::vector<std::string>>();
  for (const auto& js : j.at("subgraphs")) {
    SubgraphPlan sp;
    sp.id = js.at("id").get<int>();
    sp.members = js.at("members").get<std::vector<std::string>>();
    sp.order = js.at("order").get<std::vector<std::string>>();
    std::string cat = js.at("category").get<std::string>();
    sp.category = cat == "all-known" ? SubgraphCategory::AllKnown
                  : cat == "mixed-const" ? SubgraphCategory::MixedConst
                                         : SubgraphCategory::NacBounded;
    std::string m = js.at("method").get<std::string>();
    sp.method = m == "exhaustive" ? OrderMethod::Exhaustive
                : m == "symbolic-compare" ? OrderMethod::SymbolicCompare
                                          : OrderMethod::Heuristic;
    if (!js.at("peak").is_null())
      sp.peak = SymExpr::parse(js.at("peak").get<std::string>());
    p.subgraphs.push_back(std::move(sp));
  }
  return p;
}

ordered_json mem_json(const Graph& g, const MemPlan& p, std::int64_t alignment,
                      const std::map<std::string, std::int64_t>& env) {
  ordered_json tensors = ordered_json::array();
  for (const auto& pl : p.placements) {
    tensors.push_back({{"name", pl.lifetime.tensor},
                       {"size", pl.lifetime.size},
                       {"birth", pl.lifetime.birth},
                       {"death", pl.lifetime.death},
                       {"offset", pl.offset}});
  }
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "mem-plan";
  j["graph"] = g.name;
  j["strategy"] = p.strategy;
  j["alignment"] = alignment;
  j["env"] = env;
  j["arena"] = p.arena;
  j["tensors"] = tensors;
  return j;
}

MemPlan mem_from_json(const ordered_json& j) {
  if (!j.contains("kind") || j.at("kind") != "mem-plan")
    throw Error(Error::Kind::Input, "not a mem-plan file");
  MemPlan p;
  p.strategy = j.at("strategy").get<std::string>();
  p.arena = j.at("arena").get<std::int64_t>();
  for (const auto& t : j.at("tensors")) {
    Placement pl;
    pl.lifetime.tensor = t.at("name").get<std::string>();
    pl.lifetime.size = t.at("size").get<std::int64_t>();
    pl.lifetime.birth = t.at("birth").get<int>();
    pl.lifetime.death = t.at("death").get<int>();
    pl.offset = t.at("offset").get<std::int64_t>();
    p.placements.push_back(pl);
  }
  return p;
}

ordered_json trace_json(const Graph& g, const Trace& tr) {
  ordered_json shapes = ordered_json::object();
  for (const auto& [t, s] : tr.shapes) shapes[t] = s;
  ordered_json values = ordered_json::object();
  for (const auto& [t, v] : tr.values) values[t] = v;
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "trace";
  j["graph"] = g.name;
  j["executed"] = tr.executed;
  j["taken"] = tr.taken;
  j["peak"] = tr.peak;
  j["live_bytes"] = tr.live_bytes;
  j["shapes"] = shapes;
  j["values"] = values;
  return j;
}

// Concrete per-tensor sizes under env, for node-produced tensors only.
std::map<std::string, std::int64_t> env_sizes(const Graph& g, const RdpResult& rdp,
                                              const std::map<std::string, std::int64_t>& env) {
  ConcreteShapes cs = substitute(rdp, env);
  std::map<std::string, DType> dtypes = infer_dtypes(g);
  std::map<std::string, std::int64_t> sizes;
  for (const auto& n : g.nodes) {
    for (const auto& t : n.outputs) {
      auto it = cs.shapes.find(t);
      if (it == cs.shapes.end()) continue;
      std::int64_t b = dtype_size(dtypes.at(t));
      for (auto d : it->second) b *= d;
      sizes[t] = b;
    }
  }
  return sizes;
}

// Fill bindings for declared symbols the user did not set (documented
// default so `pipeline` works without flags).
void default_symbols(const Graph& g, std::map<std::string, std::int64_t>& env,
                     std::int64_t fallback = 16) {
  for (const auto& s : g.symbols) {
    if (!env.count(s)) env[s] = fallback;
  }
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
  if (const char* e = std::getenv("DYNDAG_SEED")) return std::strtoull(e, nullptr, 10);
  return flag_seed;
}

ConcreteEnv make_env(const Graph& g, const std::map<std::string, std::int64_t>& sym,
                     const std::map<std::string, int>& branches,
                     const std::map<std::string, std::vector<std::int64_t>>& payloads,
                     std::uint64_t seed) {
  ConcreteEnv env;
  env.symbols = sym;
  env.branches = branches;
  env.values = payloads;
  env.seed = seed;
  return env;
}

std::map<std::string, int> parse_branches(const std::vector<std::string>& specs) {
  std::map<std::string, int> out;
  for (const auto& [k, v] : parse_env(specs)) out[k] = static_cast<int>(v);
  return out;
}

ordered_json report_json(const Graph& g, const RdpResult& rdp, const FusionPlan& fp,
                         const ExecPlan& ep,
                         const std::map<std::string, std::int64_t>& env) {
  ordered_json j;
  j["schema"] = kSchema;
  j["kind"] = "report";
  j["graph"] = g.name;
  j["env"] = env;

  ordered_json fusion;
  fusion["layers_before"] = fp.layers_before;
  fusion["layers_after"] = fp.layers_after;
  fusion["layer_reduction_percent"] =
      fp.layers_before == 0
          ? 0.0
          : 100.0 * (fp.layers_before - fp.layers_after) / fp.layers_before;
  fusion["bytes_eliminated"] = fp.bytes_eliminated.render();
  j["fusion"] = fusion;

  std::map<std::string, int> cat_count, method_count;
  for (const auto& sp : ep.subgraphs) {
    ++cat_count[category_name(sp.category)];
    ++method_count[method_name(sp.method)];
  }
  ordered_json subgraphs;
  subgraphs["count"] = static_cast<int>(ep.subgraphs.size());
  ordered_json shares = ordered_json::object();
  for (const auto& [c, k] : cat_count)
    shares[c] = ep.subgraphs.empty() ? 0.0 : 100.0 * k / ep.subgraphs.size();
  subgraphs["category_percent"] = shares;
  subgraphs["methods"] = method_count;
  j["subgraphs"] = subgraphs;

  std::map<std::string, std::int64_t> sizes = env_sizes(g, rdp, env);
  std::vector<Lifetime> lts = lifetimes(ep.global_order, g, sizes);
  ordered_json memory;
  memory["lower_bound"] = peak_live_bytes(lts);
  MemPlan fpk = plan_from_peak(lts);
  MemPlan bf = plan_best_fit(lts);
  memory["from_peak_arena"] = fpk.arena;
  memory["best_fit_arena"] = bf.arena;
  if (lts.size() <= 10) {
    MemPlan opt = plan_optimal(lts, 64);
    memory["oracle_arena"] = opt.arena;
    if (opt.arena > 0) {
      memory["from_peak_over_oracle"] = double(fpk.arena) / double(opt.arena);
      memory["best_fit_over_oracle"] = double(bf.arena) / double(opt.arena);
    }
  }
  j["memory"] = memory;
  return j;
}

void print_human_analysis(const Graph& g, const RdpResult& r) {
  std::cout << "graph " << g.name << ": fixpoint after " << r.iterations
            << " sweep(s)\n";
  for (const auto& t : g.tensor_names()) {
    std::cout << "  " << t << ": " << r.shapes.at(t).render();
    const ValueInfo& v = r.values.at(t);
    if (v.is_tracked()) std::cout << " value=" << v.render();
    std::cout << "\n";
  }
  std::cout << "node classes:\n";
  for (const auto& n : g.nodes)
    std::cout << "  " << n.id << " (" << n.op << "): "
              << dynclass_name(r.node_class.at(n.id))
              << (r.nac_nodes.count(n.id) ? "  [nac]" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analysis and planning for dynamic-shape computation graphs"};
  app.require_subcommand(1);

  std::string graph_path, out_path, out_dir = ".", order_path, strategy = "from-peak";
  std::vector<std::string> env_specs, branch_specs, payload_specs, check_paths;
  std::string fusion_path, exec_path;
  bool json_out = false, dump_state = false, compare = false;
  int version_cap = 4, exhaustive_cap = 12;
  std::int64_t alignment = 64, probe = 16;
  std::uint64_t seed = 0;

  auto* analyze = app.add_subcommand("analyze", "run shape/value analysis");
  analyze->add_option("graph", graph_path)->required();
  analyze->add_flag("--json", json_out);
  analyze->add_flag("--dump-state", dump_state);
  analyze->add_option("--out", out_path);

  auto* plan = app.add_subcommand("plan", "produce a plan");
  plan->require_subcommand(1);
  auto* plan_fusion = plan->add_subcommand("fusion", "operator fusion plan");
  plan_fusion->add_option("graph", graph_path)->required();
  plan_fusion->add_option("--out", out_path);
  plan_fusion->add_option("--version-cap", version_cap);
  auto* plan_exec = plan->add_subcommand("exec", "execution order plan");
  plan_exec->add_option("graph", graph_path)->required();
  plan_exec->add_option("--out", out_path);
  plan_exec->add_option("--cap", exhaustive_cap);
  plan_exec->add_option("--probe", probe);
  auto* plan_mem = plan->add_subcommand("mem", "arena memory plan");
  plan_mem->add_option("graph", graph_path)->required();
  plan_mem->add_option("--order", order_path);
  plan_mem->add_option("--env", env_specs);
  plan_mem->add_option("--strategy", strategy)
      ->check(CLI::IsMember({"from-peak", "best-fit"}));
  plan_mem->add_option("--alignment", alignment);
  plan_mem->add_flag("--compare", compare);
  plan_mem->add_option("--out", out_path);

  auto* simulate = app.add_subcommand("simulate", "run the concrete interpreter");
  simulate->add_option("graph", graph_path)->required();
  simulate->add_option("--env", env_specs);
  simulate->add_option("--branches", branch_specs);
  simulate->add_option("--input", payload_specs);
  simulate->add_option("--check", check_paths)->delimiter(',');
  simulate->add_option("--seed", seed);
  simulate->add_flag("--json", json_out);
  simulate->add_option("--out", out_path);

  auto* report = app.add_subcommand("report", "summary metrics for a graph");
  report->add_option("graph", graph_path)->required();
  report->add_option("--fusion", fusion_path)->required();
  report->add_option("--exec", exec_path)->required();
  report->add_option("--env", env_specs);
  report->add_option("--out", out_path);

  auto* pipeline = app.add_subcommand("pipeline", "analyze, plan, and check");
  pipeline->add_option("graph", graph_path)->required();
  pipeline->add_option("--env", env_specs);
  pipeline->add_option("--branches", branch_specs);
  pipeline->add_option("--out-dir", out_dir);
  pipeline->add_option("--strategy", strategy)
      ->check(CLI::IsMember({"from-peak", "best-fit"}));
  pipeline->add_option("--version-cap", version_cap);
  pipeline->add_option("--cap", exhaustive_cap);
  pipeline->add_option("--alignment", alignment);
  pipeline->add_option("--seed", seed);

  auto* ops_cmd = app.add_subcommand("ops", "list the operator catalog");
  ops_cmd->add_flag("--json", json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (ops_cmd->parsed()) {
      if (json_out) {
        ordered_json arr = ordered_json::array();
        for (const auto& op : catalog()) {
          arr.push_back({{"name", op.name},
                         {"class", dynclass_name(op.base_class)},
                         {"min_inputs", op.min_arity},
                         {"max_inputs", op.max_arity},
                         {"outputs", op.output_arity},
                         {"shape_input_indices", op.shape_input_indices}});
        }
        ordered_json j;
        j["schema"] = kSchema;
        j["kind"] = "ops";
        j["ops"] = arr;
        std::cout << j.dump(2) << "\n";
      } else {
        for (const auto& op : catalog())
          std::cout << op.name << "\t" << dynclass_name(op.base_class) << "\n";
      }
      return 0;
    }

    Graph g = Graph::load(graph_path);
    std::map<std::string, std::int64_t> env = parse_env(env_specs);

    if (analyze->parsed()) {
      RdpResult r = run_rdp(g);
      ordered_json j = analysis_json(g, r);
      if (!out_path.empty()) write_json(out_path, j);
      if (json_out) {
        std::cout << j.dump(2) << "\n";
      } else {
        print_human_analysis(g, r);
      }
      return 0;
    }
    if (plan_fusion->parsed()) {
      RdpResult r = run_rdp(g);
      FusionPlan p = build_plan(g, r, version_cap);
      ordered_json j = fusion_json(g, p);
      if (!out_path.empty()) write_json(out_path, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (plan_exec->parsed()) {
      RdpResult r = run_rdp(g);
      ExecPlan p = build_exec_plan(g, r, {exhaustive_cap, probe});
      ordered_json j = exec_json(g, p);
      if (!out_path.empty()) write_json(out_path, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (plan_mem->parsed()) {
      RdpResult r = run_rdp(g);
      default_symbols(g, env);
      std::vector<std::string> order;
      if (!order_path.empty()) {
        order = exec_from_json(load_json(order_path)).global_order;
      } else {
        order = build_exec_plan(g, r).global_order;
      }
      std::map<std::string, std::int64_t> sizes = env_sizes(g, r, env);
      std::vector<Lifetime> lts = lifetimes(order, g, sizes);
      auto build = [&](const std::string& s) {
        return s == "best-fit" ? plan_best_fit(lts, alignment)
                               : plan_from_peak(lts, alignment);
      };
      if (compare) {
        ordered_json j;
        j["schema"] = kSchema;
        j["kind"] = "mem-plan-comparison";
        j["graph"] = g.name;
        j["lower_bound"] = peak_live_bytes(lts);
        j["plans"]["from-peak"] = mem_json(g, build("from-peak"), alignment, env);
        j["plans"]["best-fit"] = mem_json(g, build("best-fit"), alignment, env);
        if (lts.size() <= 10)
          j["plans"]["optimal-oracle"] =
              mem_json(g, plan_optimal(lts, alignment), alignment, env);
        if (!out_path.empty()) write_json(out_path, j);
        std::cout << j.dump(2) << "\n";
        return 0;
      }
      ordered_json j = mem_json(g, build(strategy), alignment, env);
      if (!out_path.empty()) write_json(out_path, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (simulate->parsed()) {
      default_symbols(g, env);
      ConcreteEnv cenv = make_env(g, env, parse_branches(branch_specs),
                                  parse_payloads(payload_specs),
                                  effective_seed(seed));
      std::optional<ExecPlan> ep;
      std::optional<MemPlan> mp;
      for (const auto& path : check_paths) {
        ordered_json j = load_json(path);
        std::string kind = j.value("kind", "");
        if (kind == "exec-plan") {
          ep = exec_from_json(j);
        } else if (kind == "mem-plan") {
          mp = mem_from_json(j);
        } else {
          throw Error(Error::Kind::Input, path + ": unrecognized plan kind");
        }
      }
      Trace tr = interpret(g, cenv, ep ? &ep->global_order : nullptr);
      ordered_json j = trace_json(g, tr);
      int rc = 0;
      if (ep && mp) {
        CheckReport cr = check_plan(g, cenv, *ep, *mp);
        j["check"] = {{"ok", cr.ok}, {"violations", cr.violations}};
        if (!cr.ok) rc = 4;
      }
      if (!out_path.empty()) write_json(out_path, j);
      if (json_out || out_path.empty()) std::cout << j.dump(2) << "\n";
      return rc;
    }
    if (report->parsed()) {
      RdpResult r = run_rdp(g);
      default_symbols(g, env);
      FusionPlan fp;  // reloaded below for layer counts; resolution not needed
      ordered_json fj = load_json(fusion_path);
      fp.layers_before = fj.at("layers_before").get<int>();
      fp.layers_after = fj.at("layers_after").get<int>();
      fp.bytes_eliminated = SymExpr::parse(fj.at("bytes_eliminated").get<std::string>());
      ExecPlan epl = exec_from_json(load_json(exec_path));
      ordered_json j = report_json(g, r, fp, epl, env);
      if (!out_path.empty()) write_json(out_path, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (pipeline->parsed()) {
      std::filesystem::create_directories(out_dir);
      std::string stem = std::filesystem::path(graph_path).stem().string();
      auto artifact = [&](const std::string& kind) {
        return (std::filesystem::path(out_dir) / (stem + "." + kind + ".json"))
            .string();
      };
      RdpResult r = run_rdp(g);
      write_json(artifact("analysis"), analysis_json(g, r));
      FusionPlan fp = build_plan(g, r, version_cap);
      write_json(artifact("fusion"), fusion_json(g, fp));
      ExecPlan ep = build_exec_plan(g, r, {exhaustive_cap, probe});
      write_json(artifact("exec"), exec_json(g, ep));
      default_symbols(g, env);
      std::map<std::string, std::int64_t> sizes = env_sizes(g, r, env);
      std::vector<Lifetime> lts = lifetimes(ep.global_order, g, sizes);
      MemPlan mp = strategy == "best-fit" ? plan_best_fit(lts, alignment)
                                          : plan_from_peak(lts, alignment);
      write_json(artifact("mem"), mem_json(g, mp, alignment, env));
      ConcreteEnv cenv = make_env(g, env, parse_branches(branch_specs), {},
                                  effective_seed(seed));
      CheckReport cr = check_plan(g, cenv, ep, mp);
      Trace tr = interpret(g, cenv, &ep.global_order);
      ordered_json tj = trace_json(g, tr);
      tj["check"] = {{"ok", cr.ok}, {"violations", cr.violations}};
      write_json(artifact("trace"), tj);
      if (!cr.ok) {
        for (const auto& v : cr.violations) std::cerr << "plan check: " << v << "\n";
        return 4;
      }
      std::cout << "wrote " << artifact("analysis") << ", " << artifact("fusion")
                << ", " << artifact("exec") << ", " << artifact("mem") << ", "
                << artifact("trace") << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
