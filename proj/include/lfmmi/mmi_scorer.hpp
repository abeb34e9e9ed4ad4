#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfmmi/emissions.hpp"
#include "lfmmi/forward.hpp"
#include "lfmmi/graph_compiler.hpp"

namespace lfmmi {

/// Score a delta takes when the child prefix cannot be aligned at all.
inline constexpr double kDefaultZeroFloor = -30.0;

/// Denominator forward scores for one utterance. They do not depend on the
/// hypothesis, so one cache serves every hypothesis of the utterance.
struct DenominatorCache {
  FrameScores frame_scores;
  std::shared_ptr<const Fsa> graph;

  double operator[](int t) const { return frame_scores[t]; }
  int num_frames() const { return frame_scores.num_frames(); }
};

DenominatorCache precompute_denominator(const Emissions &emissions,
                                        std::shared_ptr<const Fsa> g_den);

/// log P(O | num) - log P(O | den). Throws Error(kUnalignable) when the
/// numerator cannot consume all frames.
double mmi_log_posterior(const Emissions &emissions, const Fsa &g_num,
                         const DenominatorCache &den);

struct LossAndGradient {
  double loss = 0.0;
  /// d loss / d logits, T x V. Logits are the unnormalized per-frame scores
  /// that `emissions` is the log-softmax of; every row sums to zero.
  Eigen::MatrixXd grad;
};

/// loss = -log P_MMI(W | O); gradient is denominator minus numerator label
/// occupancy, pushed through the row normalization.
LossAndGradient lfmmi_loss_and_grad(const Emissions &emissions,
                                    const Fsa &g_num, const Fsa &g_den);

enum class ObjectiveForm { kAttentionCtc, kTransducer };

/// Inputs to the combined training objective. The neural losses come from
/// outside; only the MMI term is computed here.
struct LossBreakdown {
  ObjectiveForm form = ObjectiveForm::kAttentionCtc;
  double att_loss = 0.0;
  double ctc_loss = 0.0;
  double transducer_loss = 0.0;
  double mmi_logpost = 0.0;
  double alpha = 0.3;
  /// CTC share of the attention/CTC blend.
  double beta = 0.3;

  static LossBreakdown attention_ctc(double att_loss, double ctc_loss,
                                     double mmi_logpost, double alpha = 0.3,
                                     double beta = 0.3);
  static LossBreakdown transducer(double transducer_loss, double mmi_logpost,
                                  double alpha = 0.5);

  double base_loss() const;
};

/// J = base_loss - alpha * mmi_logpost. Throws for negative alpha.
double combined_objective(const LossBreakdown &parts);

/// Forward state of the numerator graph of one partial hypothesis, kept so a
/// one-token extension only computes the new graph states.
struct PrefixScoreCache {
  std::vector<std::string> tokens;
  /// Set when the graph came from a look-ahead split.
  std::optional<PrefixSplit> split;
  /// Phone chain of `tokens` when no split is used.
  std::vector<LabelId> phones;
  ForwardTrellis trellis;
  FrameScores frame_finals;
  double score = 0.0;

  bool is_root() const { return tokens.empty(); }
};

/// log sum_{t=1..T} exp(num[t] - den[t]); frames where either side is zero
/// contribute nothing.
double prefix_score_from_frames(const FrameScores &num,
                                const DenominatorCache &den);

/// The <sos>-only hypothesis. Its score is 0: every hypothesis extends it.
PrefixScoreCache root_prefix_score(const Emissions &emissions,
                                   const Lexicon &lexicon,
                                   const TopologyConfig &topo);

/// Builds the numerator of `tokens` (or of `split` when given) and runs one
/// forward pass. Throws Error(kDeadPrefix) for dead splits.
PrefixScoreCache mmi_prefix_score(const Emissions &emissions,
                                  std::span<const std::string> tokens,
                                  const Lexicon &lexicon,
                                  const TopologyConfig &topo,
                                  const DenominatorCache &den,
                                  const PrefixSplit *split = nullptr);

/// Same result as mmi_prefix_score(parent.tokens + word), computing only the
/// trellis columns of the appended word's states. `parent` must not come
/// from a split.
PrefixScoreCache extend_prefix_score(const PrefixScoreCache &parent,
                                     const std::string &word,
                                     const Emissions &emissions,
                                     const Lexicon &lexicon,
                                     const TopologyConfig &topo,
                                     const DenominatorCache &den);

/// child.score - parent.score, with log-zero guarding: both zero gives 0,
/// only the child zero gives `zero_floor`, only the parent zero gives the
/// child score. Throws Error(kInvalidArgument) unless child extends parent by
/// exactly one token.
double mmi_prefix_delta(const PrefixScoreCache &parent,
                        const PrefixScoreCache &child,
                        double zero_floor = kDefaultZeroFloor);

/// The guarding rule of mmi_prefix_delta applied to two raw scores.
double guarded_delta(double parent_score, double child_score,
                     double zero_floor = kDefaultZeroFloor);

/// num[t] - den[t], or log-zero when either is zero.
double alignment_score_from_frames(const FrameScores &num,
                                   const DenominatorCache &den, int t);

/// log P_MMI(tokens | first t frames). The empty hypothesis over zero frames
/// scores 0. Reuses `cache` when it was built for the same tokens.
double mmi_alignment_score(const Emissions &emissions,
                           std::span<const std::string> tokens, int t,
                           const Lexicon &lexicon, const TopologyConfig &topo,
                           const DenominatorCache &den,
                           const PrefixScoreCache *cache = nullptr);

}  // namespace lfmmi
