#include "lfmmi/fsa.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "lfmmi/error.hpp"

namespace lfmmi {

Fsa::Fsa(int num_states)
    : finals_(std::max(num_states, 1), LogWeight::Zero()) {}

StateId Fsa::add_state() {
  finals_.push_back(LogWeight::Zero());
  return num_states() - 1;
}

void Fsa::add_arc(StateId src, StateId dst, LabelId label, LogWeight weight) {
  arcs_.push_back({src, dst, label, weight});
  sorted_ = false;
}

void Fsa::set_final(StateId state, LogWeight weight) {
  finals_.at(state) = weight;
}

LabelId Fsa::max_label() const {
  LabelId m = kEpsilon;
  for (const Arc &arc : arcs_) m = std::max(m, arc.label);
  return m;
}

void Fsa::sort_arcs() {
  std::stable_sort(arcs_.begin(), arcs_.end(),
                   [](const Arc &a, const Arc &b) {
                     return std::tie(a.src, a.label, a.dst) <
                            std::tie(b.src, b.label, b.dst);
                   });
  offsets_.assign(num_states() + 1, 0);
  for (const Arc &arc : arcs_) ++offsets_[arc.src + 1];
  for (int s = 0; s < num_states(); ++s) offsets_[s + 1] += offsets_[s];
  sorted_ = true;
}

std::span<const Arc> Fsa::arcs_from(StateId state) const {
  if (!sorted_ || offsets_.size() != finals_.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "arcs_from() requires sort_arcs()");
  }
  return std::span<const Arc>(arcs_).subspan(
      offsets_[state], offsets_[state + 1] - offsets_[state]);
}

void Fsa::validate() const {
  const int n = num_states();
  for (const Arc &arc : arcs_) {
    if (arc.src < 0 || arc.src >= n || arc.dst < 0 || arc.dst >= n) {
      throw Error(ErrorCode::kInvalidGraph,
                  "arc " + std::to_string(arc.src) + "->" +
                      std::to_string(arc.dst) + " references a state >= " +
                      std::to_string(n));
    }
    if (arc.label < 0) {
      throw Error(ErrorCode::kInvalidGraph, "negative arc label");
    }
    if (label_space_ && arc.label >= *label_space_) {
      throw Error(ErrorCode::kLabelSpace,
                  "label " + std::to_string(arc.label) +
                      " outside label space " + std::to_string(*label_space_));
    }
  }
}

bool same_structure(const Fsa &a, const Fsa &b) {
  if (a.num_states() != b.num_states() || a.num_arcs() != b.num_arcs()) {
    return false;
  }
  if (!std::equal(a.final_weights().begin(), a.final_weights().end(),
                  b.final_weights().begin())) {
    return false;
  }
  Fsa sa = a, sb = b;
  sa.sort_arcs();
  sb.sort_arcs();
  return std::equal(sa.arcs().begin(), sa.arcs().end(), sb.arcs().begin());
}

}  // namespace lfmmi
