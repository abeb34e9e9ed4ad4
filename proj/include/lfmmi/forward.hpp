#pragma once

#include <Eigen/Core>

#include "lfmmi/emissions.hpp"
#include "lfmmi/fsa.hpp"

namespace lfmmi {

/// values[t] = log P(first t frames | graph): mass over all paths that consume
/// exactly t frames and end in a final state. values[0] is the final mass
/// reachable from the start by epsilons alone.
struct FrameScores {
  Eigen::VectorXd values;

  int num_frames() const { return static_cast<int>(values.size()) - 1; }
  double operator[](int t) const { return values(t); }
  /// False when no frame count reaches a final state.
  bool alignable() const;
};

/// Forward log-probabilities after epsilon closure, (T+1) x num_states.
/// Row t holds the mass of paths that have consumed t frames.
struct ForwardTrellis {
  Eigen::MatrixXd alpha;
};

ForwardTrellis forward_trellis(const Fsa &graph, const Emissions &emissions);

/// Fills in the trellis columns for states [trellis.alpha.cols(),
/// graph.num_states()). The existing columns must have been produced by a
/// graph whose states and arcs are a prefix of `graph`; no arc may lead from a
/// new state back to an old one, so the old columns stay exact.
void extend_forward_trellis(const Fsa &graph, const Emissions &emissions,
                            ForwardTrellis &trellis);

FrameScores frame_scores(const Fsa &graph, const ForwardTrellis &trellis);

FrameScores forward_frame_scores(const Fsa &graph, const Emissions &emissions);

/// Backward log-probabilities after epsilon closure, (T+1) x num_states;
/// row T holds the final weights.
Eigen::MatrixXd backward_trellis(const Fsa &graph, const Emissions &emissions);

struct OccupancyTable {
  /// gamma(t, arc): posterior probability that the path consumes frame t
  /// (0-based) on `arc`. Epsilon arcs have zero columns.
  Eigen::MatrixXd gamma;
  LogWeight total;

  /// Aggregates arc occupancies by label into a T x alphabet_size matrix.
  Eigen::MatrixXd label_occupancy(const Fsa &graph, int alphabet_size) const;
};

/// Throws Error(kUnalignable) when the graph cannot consume all T frames.
OccupancyTable forward_backward(const Fsa &graph, const Emissions &emissions);

}  // namespace lfmmi
