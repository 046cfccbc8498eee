// SPDX-License-Identifier: Apache-2.0

#include "dyndag/mem.hpp"

#include <algorithm>
#include <limits>

namespace dyndag {

namespace {

std::int64_t align_up(std::int64_t v, std::int64_t alignment) {
  return (v + alignment - 1) / alignment * alignment;
}

bool overlaps(const Lifetime& a, const Lifetime& b) {
  return a.birth <= b.death && b.birth <= a.death;
}

// Free intervals (w.r.t. tensors whose lifetimes overlap `lt`), as sorted
// [start, end) pairs; the final interval is unbounded (end = max int64).
std::vector<std::pair<std::int64_t, std::int64_t>> gaps(
    const std::vector<Placement>& placed, const Lifetime& lt) {
  std::vector<std::pair<std::int64_t, std::int64_t>> busy;
  for (const auto& p : placed) {
    if (overlaps(p.lifetime, lt)) busy.push_back({p.offset, p.offset + p.lifetime.size});
  }
  std::sort(busy.begin(), busy.end());
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::int64_t cur = 0;
  for (const auto& [s, e] : busy) {
    if (s > cur) out.push_back({cur, s});
    cur = std::max(cur, e);
  }
  out.push_back({cur, std::numeric_limits<std::int64_t>::max()});
  return out;
}

// Lowest-offset gap that fits.
std::int64_t place_lowest(const std::vector<Placement>& placed, const Lifetime& lt,
                          std::int64_t alignment) {
  for (const auto& [s, e] : gaps(placed, lt)) {
    std::int64_t o = align_up(s, alignment);
    if (e == std::numeric_limits<std::int64_t>::max() || o + lt.size <= e) return o;
  }
  return 0;  // unreachable: the tail gap always fits
}

// Smallest adequate gap (classic best fit); ties at the lowest offset. The
// unbounded tail gap is chosen only when no finite gap fits.
std::int64_t place_best(const std::vector<Placement>& placed, const Lifetime& lt,
                        std::int64_t alignment) {
  std::int64_t best_offset = -1;
  std::int64_t best_slack = std::numeric_limits<std::int64_t>::max();
  for (const auto& [s, e] : gaps(placed, lt)) {
    std::int64_t o = align_up(s, alignment);
    if (e == std::numeric_limits<std::int64_t>::max()) {
      if (best_offset < 0) best_offset = o;
      break;
    }
    if (o + lt.size > e) continue;
    std::int64_t slack = (e - s) - lt.size;
    if (slack < best_slack) {
      best_slack = slack;
      best_offset = o;
    }
  }
  return best_offset;
}

std::int64_t arena_of(const std::vector<Placement>& placed) {
  std::int64_t a = 0;
  for (const auto& p : placed) a = std::max(a, p.offset + p.lifetime.size);
  return a;
}

bool by_size_desc_name(const Lifetime& a, const Lifetime& b) {
  if (a.size != b.size) return a.size > b.size;
  return a.tensor < b.tensor;
}

}  // namespace

std::vector<Lifetime> lifetimes(const std::vector<std::vector<std::string>>& steps,
                                const Graph& g,
                                const std::map<std::string, std::int64_t>& sizes) {
  std::map<std::string, int> node_step;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (const auto& id : steps[s]) node_step[id] = static_cast<int>(s);
  }
  const int last = static_cast<int>(steps.size()) - 1;
  std::vector<Lifetime> out;
  for (const auto& n : g.nodes) {
    auto it = node_step.find(n.id);
    if (it == node_step.end()) continue;
    const int birth = it->second;
    for (const auto& t : n.outputs) {
      auto sz = sizes.find(t);
      if (sz == sizes.end() || sz->second <= 0) continue;
      int death = birth;
      bool internal_only = false;
      if (!g.is_graph_output(t)) {
        const auto& cs = g.consumers(t);
        internal_only = !cs.empty();
        for (int c : cs) {
          auto cit = node_step.find(g.nodes[c].id);
          if (cit == node_step.end()) {
            internal_only = false;  // consumed outside the planned steps
            death = std::max(death, last);
            continue;
          }
          death = std::max(death, cit->second);
          if (cit->second != birth) internal_only = false;
        }
      } else {
        death = last;
      }
      // Consumed entirely inside its own (fused) step: never materialized.
      if (internal_only && steps[birth].size() > 1) continue;
      out.push_back({t, sz->second, birth, death});
    }
  }
  return out;
}

std::vector<Lifetime> lifetimes(const std::vector<std::string>& order, const Graph& g,
                                const std::map<std::string, std::int64_t>& sizes) {
  std::vector<std::vector<std::string>> steps;
  for (const auto& id : order) steps.push_back({id});
  return lifetimes(steps, g, sizes);
}

std::int64_t peak_live_bytes(const std::vector<Lifetime>& lts) {
  std::int64_t peak = 0;
  for (const auto& probe : lts) {
    // Candidate peak steps are birth steps.
    std::int64_t total = 0;
    for (const auto& l : lts) {
      if (l.birth <= probe.birth && probe.birth <= l.death) total += l.size;
    }
    peak = std::max(peak, total);
  }
  return peak;
}

MemPlan plan_from_peak(const std::vector<Lifetime>& lts, std::int64_t alignment) {
  MemPlan plan;
  plan.strategy = "from-peak";
  if (lts.empty()) return plan;
  for (const auto& l : lts) {
    if (l.size <= 0 || l.birth > l.death)
      throw Error(Error::Kind::Input, "invalid lifetime for " + l.tensor);
  }
  int first = lts[0].birth, last = lts[0].death;
  for (const auto& l : lts) {
    first = std::min(first, l.birth);
    last = std::max(last, l.death);
  }
  // Earliest step with maximal live bytes.
  int peak_step = first;
  std::int64_t peak = -1;
  for (int s = first; s <= last; ++s) {
    std::int64_t total = 0;
    for (const auto& l : lts) {
      if (l.birth <= s && s <= l.death) total += l.size;
    }
    if (total > peak) {
      peak = total;
      peak_step = s;
    }
  }
  std::vector<bool> done(lts.size(), false);
  // Peak set: contiguous from offset 0, descending size, ties by name.
  std::vector<int> peak_set;
  for (std::size_t i = 0; i < lts.size(); ++i) {
    if (lts[i].birth <= peak_step && peak_step <= lts[i].death)
      peak_set.push_back(static_cast<int>(i));
  }
  std::sort(peak_set.begin(), peak_set.end(),
            [&](int a, int b) { return by_size_desc_name(lts[a], lts[b]); });
  std::int64_t cur = 0;
  for (int i : peak_set) {
    std::int64_t o = align_up(cur, alignment);
    plan.placements.push_back({lts[i], o});
    cur = o + lts[i].size;
    done[i] = true;
  }
  auto sweep = [&](int step, bool forward) {
    std::vector<int> batch;
    for (std::size_t i = 0; i < lts.size(); ++i) {
      if (done[i]) continue;
      if ((forward && lts[i].birth == step) || (!forward && lts[i].death == step))
        batch.push_back(static_cast<int>(i));
    }
    std::sort(batch.begin(), batch.end(),
              [&](int a, int b) { return by_size_desc_name(lts[a], lts[b]); });
    for (int i : batch) {
      plan.placements.push_back({lts[i], place_lowest(plan.placements, lts[i], alignment)});
      done[i] = true;
    }
  };
  for (int s = peak_step + 1; s <= last; ++s) sweep(s, true);
  for (int s = peak_step - 1; s >= first; --s) sweep(s, false);
  plan.arena = arena_of(plan.placements);
  return plan;
}

MemPlan plan_best_fit(const std::vector<Lifetime>& lts, std::int64_t alignment) {
  MemPlan plan;
  plan.strategy = "best-fit";
  std::vector<Lifetime> sorted = lts;
  std::sort(sorted.begin(), sorted.end(), [](const Lifetime& a, const Lifetime& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    return by_size_desc_name(a, b);
  });
  for (const auto& l : sorted) {
    if (l.size <= 0 || l.birth > l.death)
      throw Error(Error::Kind::Input, "invalid lifetime for " + l.tensor);
    plan.placements.push_back({l, place_best(plan.placements, l, alignment)});
  }
  plan.arena = arena_of(plan.placements);
  return plan;
}

namespace {

struct Oracle {
  const std::vector<Lifetime>& lts;
  std::int64_t alignment;
  std::vector<Placement> current;
  std::vector<Placement> best;
  std::int64_t best_arena;

  void search(std::size_t idx, std::int64_t arena) {
    if (arena >= best_arena) return;
    if (idx == lts.size()) {
      best_arena = arena;
      best = current;
      return;
    }
    const Lifetime& l = lts[idx];
    // Candidate offsets: 0 and the aligned top of each time-overlapping
    // placed tensor (every compacted solution uses only these).
    std::vector<std::int64_t> cands{0};
    for (const auto& p : current) {
      if (overlaps(p.lifetime, l))
        cands.push_back(align_up(p.offset + p.lifetime.size, alignment));
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    for (std::int64_t o : cands) {
      bool free = true;
      for (const auto& p : current) {
        if (overlaps(p.lifetime, l) && o < p.offset + p.lifetime.size &&
            p.offset < o + l.size) {
          free = false;
          break;
        }
      }
      if (!free) continue;
      current.push_back({l, o});
      search(idx + 1, std::max(arena, o + l.size));
      current.pop_back();
    }
  }
};

}  // namespace

MemPlan plan_optimal(const std::vector<Lifetime>& lts, std::int64_t alignment,
                     int max_tensors) {
  if (static_cast<int>(lts.size()) > max_tensors)
    throw Error(Error::Kind::Input,
                "optimal search limited to " + std::to_string(max_tensors) +
                    " tensors, got " + std::to_string(lts.size()));
  std::vector<Lifetime> sorted = lts;
  std::sort(sorted.begin(), sorted.end(), by_size_desc_name);
  MemPlan seed = plan_from_peak(lts, alignment);
  MemPlan seed2 = plan_best_fit(lts, alignment);
  if (seed2.arena < seed.arena) seed = std::move(seed2);
  Oracle o{sorted, alignment, {}, seed.placements, seed.arena + 1};
  o.search(0, 0);
  MemPlan plan;
  plan.strategy = "optimal-oracle";
  plan.placements = o.best;
  plan.arena = arena_of(plan.placements);
  return plan;
}

}  // namespace dyndag
