#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfmmi/log_weight.hpp"

namespace lfmmi {

using StateId = std::int32_t;
using LabelId = std::int32_t;

inline constexpr LabelId kEpsilon = 0;
inline constexpr LabelId kBlank = 1;

struct Arc {
  StateId src = 0;
  StateId dst = 0;
  LabelId label = kEpsilon;
  LogWeight weight;

  friend bool operator==(const Arc &, const Arc &) = default;
};

/// Weighted acceptor over integer labels in the log semiring. State 0 is the
/// start state. Label 0 is epsilon; every other label is consumed one per
/// frame by the dynamic programs in forward.hpp.
class Fsa {
 public:
  explicit Fsa(int num_states = 1);

  StateId add_state();
  void add_arc(StateId src, StateId dst, LabelId label,
               LogWeight weight = LogWeight::One());
  void set_final(StateId state, LogWeight weight = LogWeight::One());

  int num_states() const { return static_cast<int>(finals_.size()); }
  int num_arcs() const { return static_cast<int>(arcs_.size()); }
  StateId start() const { return 0; }

  std::span<const Arc> arcs() const { return arcs_; }
  LogWeight final_weight(StateId state) const { return finals_.at(state); }
  bool is_final(StateId state) const { return !finals_.at(state).is_zero(); }
  std::span<const LogWeight> final_weights() const { return finals_; }

  /// Upper bound (exclusive) on labels, when known. Composition refuses to
  /// combine acceptors whose label spaces are both known and differ.
  std::optional<int> label_space() const { return label_space_; }
  void set_label_space(std::optional<int> n) { label_space_ = n; }
  LabelId max_label() const;

  /// Sorts arcs by (src, label, dst) and builds the per-state index used by
  /// arcs_from().
  void sort_arcs();
  bool arcs_sorted() const { return sorted_; }
  /// Leaving arcs of `state`; requires sort_arcs().
  std::span<const Arc> arcs_from(StateId state) const;

  /// Throws Error(kInvalidGraph) if an arc endpoint is out of range or a
  /// label is negative.
  void validate() const;

 private:
  std::vector<Arc> arcs_;
  std::vector<LogWeight> finals_;
  std::vector<int> offsets_;
  std::optional<int> label_space_;
  bool sorted_ = true;
};

/// Structural equality: same states, finals and arc multiset.
bool same_structure(const Fsa &a, const Fsa &b);

}  // namespace lfmmi
