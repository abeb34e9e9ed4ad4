#include "lfmmi/fsa_algo.hpp"

#include <deque>
#include <map>
#include <tuple>

#include "lfmmi/error.hpp"

namespace lfmmi {
namespace {

// (state in a, state in b, filter). Filter 1 means a b-side epsilon has been
// taken since the last matched label, so a-side epsilons are blocked.
using ComposeState = std::tuple<StateId, StateId, int>;

bool is_epsilon_self_loop(const Arc &arc) {
  return arc.label == kEpsilon && arc.src == arc.dst;
}

}  // namespace

Fsa compose(const Fsa &a_in, const Fsa &b_in) {
  if (a_in.label_space() && b_in.label_space() &&
      *a_in.label_space() != *b_in.label_space()) {
    throw Error(ErrorCode::kLabelSpace,
                "compose: label spaces differ (" +
                    std::to_string(*a_in.label_space()) + " vs " +
                    std::to_string(*b_in.label_space()) + ")");
  }
  a_in.validate();
  b_in.validate();
  Fsa a = a_in, b = b_in;
  a.sort_arcs();
  b.sort_arcs();

  Fsa out(1);
  out.set_label_space(a.label_space() ? a.label_space() : b.label_space());
  std::map<ComposeState, StateId> ids;
  std::deque<ComposeState> queue;
  auto lookup = [&](const ComposeState &key) {
    auto [it, inserted] = ids.emplace(key, 0);
    if (inserted) {
      it->second = ids.size() == 1 ? 0 : out.add_state();
      queue.push_back(key);
    }
    return it->second;
  };
  lookup({a.start(), b.start(), 0});

  while (!queue.empty()) {
    const ComposeState key = queue.front();
    queue.pop_front();
    const auto [qa, qb, filter] = key;
    const StateId src = ids.at(key);

    const LogWeight final_weight =
        times(a.final_weight(qa), b.final_weight(qb));
    if (!final_weight.is_zero()) out.set_final(src, final_weight);

    auto arcs_a = a.arcs_from(qa);
    auto arcs_b = b.arcs_from(qb);
    if (filter == 0) {
      for (const Arc &arc : arcs_a) {
        if (arc.label != kEpsilon) break;
        if (is_epsilon_self_loop(arc)) continue;
        out.add_arc(src, lookup({arc.dst, qb, 0}), kEpsilon, arc.weight);
      }
    }
    for (const Arc &arc : arcs_b) {
      if (arc.label != kEpsilon) break;
      if (is_epsilon_self_loop(arc)) continue;
      out.add_arc(src, lookup({qa, arc.dst, 1}), kEpsilon, arc.weight);
    }
    // Merge-join on label over the sorted arc lists.
    auto ia = arcs_a.begin();
    auto ib = arcs_b.begin();
    while (ia != arcs_a.end() && ia->label == kEpsilon) ++ia;
    while (ib != arcs_b.end() && ib->label == kEpsilon) ++ib;
    while (ia != arcs_a.end() && ib != arcs_b.end()) {
      if (ia->label < ib->label) {
        ++ia;
      } else if (ib->label < ia->label) {
        ++ib;
      } else {
        const LabelId label = ia->label;
        auto ib_end = ib;
        while (ib_end != arcs_b.end() && ib_end->label == label) ++ib_end;
        for (; ia != arcs_a.end() && ia->label == label; ++ia) {
          for (auto jb = ib; jb != ib_end; ++jb) {
            out.add_arc(src, lookup({ia->dst, jb->dst, 0}), label,
                        times(ia->weight, jb->weight));
          }
        }
        ib = ib_end;
      }
    }
  }
  return connect(out);
}

Fsa connect(const Fsa &a) {
  a.validate();
  const int n = a.num_states();
  std::vector<std::vector<StateId>> succ(n), pred(n);
  for (const Arc &arc : a.arcs()) {
    if (arc.weight.is_zero()) continue;
    succ[arc.src].push_back(arc.dst);
    pred[arc.dst].push_back(arc.src);
  }
  auto sweep = [n](std::vector<StateId> seeds,
                   const std::vector<std::vector<StateId>> &edges) {
    std::vector<bool> seen(n, false);
    for (StateId s : seeds) seen[s] = true;
    while (!seeds.empty()) {
      const StateId s = seeds.back();
      seeds.pop_back();
      for (StateId d : edges[s]) {
        if (!seen[d]) {
          seen[d] = true;
          seeds.push_back(d);
        }
      }
    }
    return seen;
  };
  const std::vector<bool> accessible = sweep({a.start()}, succ);
  std::vector<StateId> finals;
  for (StateId s = 0; s < n; ++s) {
    if (a.is_final(s)) finals.push_back(s);
  }
  const std::vector<bool> coaccessible = sweep(finals, pred);

  Fsa out(1);
  out.set_label_space(a.label_space());
  if (!coaccessible[a.start()]) return out;

  std::vector<StateId> remap(n, -1);
  remap[a.start()] = 0;
  for (StateId s = 0; s < n; ++s) {
    if (s != a.start() && accessible[s] && coaccessible[s]) {
      remap[s] = out.add_state();
    }
  }
  for (StateId s = 0; s < n; ++s) {
    if (remap[s] >= 0 && a.is_final(s)) {
      out.set_final(remap[s], a.final_weight(s));
    }
  }
  for (const Arc &arc : a.arcs()) {
    if (arc.weight.is_zero() || remap[arc.src] < 0 || remap[arc.dst] < 0) {
      continue;
    }
    out.add_arc(remap[arc.src], remap[arc.dst], arc.label, arc.weight);
  }
  return out;
}

std::vector<Arc> epsilon_arcs_topological(const Fsa &a) {
  const int n = a.num_states();
  std::vector<std::vector<const Arc *>> out_arcs(n);
  std::vector<int> in_degree(n, 0);
  for (const Arc &arc : a.arcs()) {
    if (arc.label != kEpsilon || arc.weight.is_zero()) continue;
    out_arcs[arc.src].push_back(&arc);
    ++in_degree[arc.dst];
  }
  std::deque<StateId> ready;
  for (StateId s = 0; s < n; ++s) {
    if (in_degree[s] == 0) ready.push_back(s);
  }
  std::vector<Arc> ordered;
  int visited = 0;
  while (!ready.empty()) {
    const StateId s = ready.front();
    ready.pop_front();
    ++visited;
    for (const Arc *arc : out_arcs[s]) {
      ordered.push_back(*arc);
      if (--in_degree[arc->dst] == 0) ready.push_back(arc->dst);
    }
  }
  if (visited != n) {
    throw Error(ErrorCode::kInvalidGraph,
                "graph has an epsilon cycle with non-zero weight");
  }
  return ordered;
}

}  // namespace lfmmi
