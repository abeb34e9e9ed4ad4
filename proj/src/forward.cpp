#include "lfmmi/forward.hpp"

#include <string>

#include "lfmmi/error.hpp"
#include "lfmmi/fsa_algo.hpp"
#include "lfmmi/log_weight.hpp"

namespace lfmmi {
namespace {

constexpr double kZero = kLogZero<double>;

void check_labels(const Fsa &graph, const Emissions &emissions) {
  graph.validate();
  const LabelId max_label = graph.max_label();
  if (max_label >= emissions.alphabet_size()) {
    throw Error(ErrorCode::kLabelSpace,
                "graph label " + std::to_string(max_label) +
                    " exceeds emission alphabet size " +
                    std::to_string(emissions.alphabet_size()));
  }
}

void accumulate(double &slot, double value) {
  if (!is_log_zero(value)) slot = log_add(slot, value);
}

}  // namespace

bool FrameScores::alignable() const {
  for (Eigen::Index t = 0; t < values.size(); ++t) {
    if (!is_log_zero(values(t))) return true;
  }
  return false;
}

void extend_forward_trellis(const Fsa &graph, const Emissions &emissions,
                            ForwardTrellis &trellis) {
  check_labels(graph, emissions);
  const int num_frames = emissions.num_frames();
  const StateId first_new = static_cast<StateId>(trellis.alpha.cols());
  const int num_states = graph.num_states();
  if (first_new > num_states) {
    throw Error(ErrorCode::kInvalidArgument,
                "trellis has more columns than the graph has states");
  }
  if (first_new > 0 && trellis.alpha.rows() != num_frames + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "trellis frame count does not match emissions");
  }
  for (const Arc &arc : graph.arcs()) {
    if (arc.src >= first_new && arc.dst < first_new) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot extend trellis: arc leads from a new state back to "
                  "an existing one");
    }
  }
  if (first_new == num_states && first_new > 0) return;

  const std::vector<Arc> epsilons = epsilon_arcs_topological(graph);
  std::vector<Arc> emitting;
  for (const Arc &arc : graph.arcs()) {
    if (arc.label != kEpsilon && !arc.weight.is_zero() &&
        arc.dst >= first_new) {
      emitting.push_back(arc);
    }
  }

  Eigen::MatrixXd &alpha = trellis.alpha;
  alpha.conservativeResize(num_frames + 1, num_states);
  alpha.rightCols(num_states - first_new).setConstant(kZero);

  auto close = [&](int t) {
    for (const Arc &arc : epsilons) {
      if (arc.dst < first_new) continue;
      const double from = alpha(t, arc.src);
      if (!is_log_zero(from)) {
        accumulate(alpha(t, arc.dst), from + arc.weight.value());
      }
    }
  };

  if (first_new == 0) alpha(0, graph.start()) = 0.0;
  close(0);
  const Eigen::MatrixXd &logp = emissions.logp();
  for (int t = 1; t <= num_frames; ++t) {
    for (const Arc &arc : emitting) {
      const double from = alpha(t - 1, arc.src);
      if (is_log_zero(from)) continue;
      accumulate(alpha(t, arc.dst),
                 from + arc.weight.value() + logp(t - 1, arc.label));
    }
    close(t);
  }
}

ForwardTrellis forward_trellis(const Fsa &graph, const Emissions &emissions) {
  ForwardTrellis trellis;
  extend_forward_trellis(graph, emissions, trellis);
  return trellis;
}

FrameScores frame_scores(const Fsa &graph, const ForwardTrellis &trellis) {
  const Eigen::Index rows = trellis.alpha.rows();
  FrameScores scores{Eigen::VectorXd::Constant(rows, kZero)};
  for (StateId s = 0; s < graph.num_states(); ++s) {
    const LogWeight final_weight = graph.final_weight(s);
    if (final_weight.is_zero()) continue;
    for (Eigen::Index t = 0; t < rows; ++t) {
      const double a = trellis.alpha(t, s);
      if (!is_log_zero(a)) {
        accumulate(scores.values(t), a + final_weight.value());
      }
    }
  }
  return scores;
}

FrameScores forward_frame_scores(const Fsa &graph,
                                 const Emissions &emissions) {
  return frame_scores(graph, forward_trellis(graph, emissions));
}

Eigen::MatrixXd backward_trellis(const Fsa &graph,
                                 const Emissions &emissions) {
  check_labels(graph, emissions);
  const int num_frames = emissions.num_frames();
  const int num_states = graph.num_states();
  const std::vector<Arc> epsilons = epsilon_arcs_topological(graph);
  Eigen::MatrixXd beta =
      Eigen::MatrixXd::Constant(num_frames + 1, num_states, kZero);

  auto close = [&](int t) {
    for (auto it = epsilons.rbegin(); it != epsilons.rend(); ++it) {
      const double to = beta(t, it->dst);
      if (!is_log_zero(to)) {
        accumulate(beta(t, it->src), to + it->weight.value());
      }
    }
  };

  for (StateId s = 0; s < num_states; ++s) {
    beta(num_frames, s) = graph.final_weight(s).value();
  }
  close(num_frames);
  const Eigen::MatrixXd &logp = emissions.logp();
  for (int t = num_frames; t >= 1; --t) {
    for (const Arc &arc : graph.arcs()) {
      if (arc.label == kEpsilon || arc.weight.is_zero()) continue;
      const double to = beta(t, arc.dst);
      if (is_log_zero(to)) continue;
      accumulate(beta(t - 1, arc.src),
                 to + arc.weight.value() + logp(t - 1, arc.label));
    }
    close(t - 1);
  }
  return beta;
}

OccupancyTable forward_backward(const Fsa &graph,
                                const Emissions &emissions) {
  const ForwardTrellis forward = forward_trellis(graph, emissions);
  const int num_frames = emissions.num_frames();
  const double total = frame_scores(graph, forward)[num_frames];
  if (is_log_zero(total)) {
    throw Error(ErrorCode::kUnalignable,
                "transcript unalignable: no path consumes all " +
                    std::to_string(num_frames) + " frames");
  }
  const Eigen::MatrixXd beta = backward_trellis(graph, emissions);
  const Eigen::MatrixXd &logp = emissions.logp();

  OccupancyTable table{Eigen::MatrixXd::Zero(num_frames, graph.num_arcs()),
                       LogWeight(total)};
  const auto arcs = graph.arcs();
  for (int i = 0; i < graph.num_arcs(); ++i) {
    const Arc &arc = arcs[i];
    if (arc.label == kEpsilon || arc.weight.is_zero()) continue;
    for (int t = 0; t < num_frames; ++t) {
      const double a = forward.alpha(t, arc.src);
      const double b = beta(t + 1, arc.dst);
      if (is_log_zero(a) || is_log_zero(b)) continue;
      table.gamma(t, i) =
          std::exp(a + arc.weight.value() + logp(t, arc.label) + b - total);
    }
  }
  return table;
}

Eigen::MatrixXd OccupancyTable::label_occupancy(const Fsa &graph,
                                                int alphabet_size) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(gamma.rows(), alphabet_size);
  const auto arcs = graph.arcs();
  for (int i = 0; i < graph.num_arcs(); ++i) {
    if (arcs[i].label == kEpsilon) continue;
    out.col(arcs[i].label) += gamma.col(i);
  }
  return out;
}

}  // namespace lfmmi
