#include "lfmmi/mmi_scorer.hpp"

#include <algorithm>

#include "lfmmi/error.hpp"

namespace lfmmi {

DenominatorCache precompute_denominator(const Emissions &emissions,
                                        std::shared_ptr<const Fsa> g_den) {
  if (!g_den) {
    throw Error(ErrorCode::kInvalidArgument, "null denominator graph");
  }
  return {forward_frame_scores(*g_den, emissions), std::move(g_den)};
}

double mmi_log_posterior(const Emissions &emissions, const Fsa &g_num,
                         const DenominatorCache &den) {
  const int num_frames = emissions.num_frames();
  if (den.num_frames() != num_frames) {
    throw Error(ErrorCode::kInvalidArgument,
                "denominator cache frame count does not match emissions");
  }
  const double num = forward_frame_scores(g_num, emissions)[num_frames];
  if (is_log_zero(num)) {
    throw Error(ErrorCode::kUnalignable,
                "transcript unalignable in " + std::to_string(num_frames) +
                    " frames");
  }
  return num - den[num_frames];
}

LossAndGradient lfmmi_loss_and_grad(const Emissions &emissions,
                                    const Fsa &g_num, const Fsa &g_den) {
  const OccupancyTable num = forward_backward(g_num, emissions);
  const OccupancyTable den = forward_backward(g_den, emissions);
  const int v = emissions.alphabet_size();
  LossAndGradient out;
  out.loss = den.total.value() - num.total.value();
  const Eigen::MatrixXd dlogp =
      den.label_occupancy(g_den, v) - num.label_occupancy(g_num, v);
  // Through log-softmax: g_j - softmax_j * sum_v g_v.
  const Eigen::MatrixXd probs = emissions.logp().array().exp();
  out.grad = dlogp - (probs.array().colwise() * dlogp.rowwise().sum().array())
                         .matrix();
  return out;
}

LossBreakdown LossBreakdown::attention_ctc(double att_loss, double ctc_loss,
                                           double mmi_logpost, double alpha,
                                           double beta) {
  LossBreakdown parts;
  parts.form = ObjectiveForm::kAttentionCtc;
  parts.att_loss = att_loss;
  parts.ctc_loss = ctc_loss;
  parts.mmi_logpost = mmi_logpost;
  parts.alpha = alpha;
  parts.beta = beta;
  return parts;
}

LossBreakdown LossBreakdown::transducer(double transducer_loss,
                                        double mmi_logpost, double alpha) {
  LossBreakdown parts;
  parts.form = ObjectiveForm::kTransducer;
  parts.transducer_loss = transducer_loss;
  parts.mmi_logpost = mmi_logpost;
  parts.alpha = alpha;
  return parts;
}

double LossBreakdown::base_loss() const {
  if (form == ObjectiveForm::kTransducer) return transducer_loss;
  return (1.0 - beta) * att_loss + beta * ctc_loss;
}

double combined_objective(const LossBreakdown &parts) {
  if (!(parts.alpha >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "MMI weight alpha must be >= 0");
  }
  return parts.base_loss() - parts.alpha * parts.mmi_logpost;
}

double prefix_score_from_frames(const FrameScores &num,
                                const DenominatorCache &den) {
  double score = kLogZero<double>;
  for (int t = 1; t <= num.num_frames(); ++t) {
    const double term = alignment_score_from_frames(num, den, t);
    if (!is_log_zero(term)) score = log_add(score, term);
  }
  return score;
}

double alignment_score_from_frames(const FrameScores &num,
                                   const DenominatorCache &den, int t) {
  if (t < 0 || t > num.num_frames() || den.num_frames() != num.num_frames()) {
    throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  }
  if (is_log_zero(num[t]) || is_log_zero(den[t])) return kLogZero<double>;
  return num[t] - den[t];
}

PrefixScoreCache root_prefix_score(const Emissions &emissions,
                                   const Lexicon &lexicon,
                                   const TopologyConfig &topo) {
  PrefixScoreCache root;
  const Fsa graph = compile_phone_numerator({}, lexicon.phones().size(), topo);
  root.trellis = forward_trellis(graph, emissions);
  root.frame_finals = frame_scores(graph, root.trellis);
  root.score = 0.0;
  return root;
}

PrefixScoreCache mmi_prefix_score(const Emissions &emissions,
                                  std::span<const std::string> tokens,
                                  const Lexicon &lexicon,
                                  const TopologyConfig &topo,
                                  const DenominatorCache &den,
                                  const PrefixSplit *split) {
  PrefixScoreCache cache;
  cache.tokens.assign(tokens.begin(), tokens.end());
  Fsa graph;
  if (split) {
    cache.split = *split;
    graph = compile_prefix_numerator(*split, lexicon, topo);
  } else {
    cache.phones = expand_to_phones(tokens, lexicon);
    graph = compile_phone_numerator(cache.phones, lexicon.phones().size(),
                                    topo);
  }
  cache.trellis = forward_trellis(graph, emissions);
  cache.frame_finals = frame_scores(graph, cache.trellis);
  cache.score = prefix_score_from_frames(cache.frame_finals, den);
  return cache;
}

PrefixScoreCache extend_prefix_score(const PrefixScoreCache &parent,
                                     const std::string &word,
                                     const Emissions &emissions,
                                     const Lexicon &lexicon,
                                     const TopologyConfig &topo,
                                     const DenominatorCache &den) {
  if (parent.split) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot extend a look-ahead prefix cache");
  }
  PrefixScoreCache child;
  child.tokens = parent.tokens;
  child.tokens.push_back(word);
  child.phones = parent.phones;
  const auto &pron = lexicon.pronunciation(word);
  child.phones.insert(child.phones.end(), pron.begin(), pron.end());
  const Fsa graph =
      compile_phone_numerator(child.phones, lexicon.phones().size(), topo);
  child.trellis = parent.trellis;
  extend_forward_trellis(graph, emissions, child.trellis);
  child.frame_finals = frame_scores(graph, child.trellis);
  child.score = prefix_score_from_frames(child.frame_finals, den);
  return child;
}

double guarded_delta(double parent_score, double child_score,
                     double zero_floor) {
  const bool parent_zero = is_log_zero(parent_score);
  const bool child_zero = is_log_zero(child_score);
  if (parent_zero && child_zero) return 0.0;
  if (child_zero) return zero_floor;
  if (parent_zero) return child_score;
  return child_score - parent_score;
}

double mmi_prefix_delta(const PrefixScoreCache &parent,
                        const PrefixScoreCache &child, double zero_floor) {
  if (child.tokens.size() != parent.tokens.size() + 1 ||
      !std::equal(parent.tokens.begin(), parent.tokens.end(),
                  child.tokens.begin())) {
    throw Error(ErrorCode::kInvalidArgument,
                "child prefix does not extend parent by one token");
  }
  return guarded_delta(parent.score, child.score, zero_floor);
}

double mmi_alignment_score(const Emissions &emissions,
                           std::span<const std::string> tokens, int t,
                           const Lexicon &lexicon, const TopologyConfig &topo,
                           const DenominatorCache &den,
                           const PrefixScoreCache *cache) {
  if (t < 0 || t > emissions.num_frames()) {
    throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  }
  if (tokens.empty() && t == 0) return 0.0;
  if (cache && !cache->split &&
      std::equal(tokens.begin(), tokens.end(), cache->tokens.begin(),
                 cache->tokens.end())) {
    return alignment_score_from_frames(cache->frame_finals, den, t);
  }
  const std::vector<LabelId> phones = expand_to_phones(tokens, lexicon);
  const Fsa graph =
      compile_phone_numerator(phones, lexicon.phones().size(), topo);
  return alignment_score_from_frames(forward_frame_scores(graph, emissions),
                                     den, t);
}

}  // namespace lfmmi
