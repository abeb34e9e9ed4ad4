#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lfmmi/mmi_scorer.hpp"
#include "lfmmi/scorers.hpp"

namespace lfmmi {

struct DecodeConfig {
  int beam = 10;
  double mmi_prefix_weight = 0.3;
  double mmi_align_weight = 0.2;
  /// Weight of the base posterior in N-best rescoring; the MMI term gets
  /// 1 - rescore_lambda.
  double rescore_lambda = 0.8;
  double lm_weight = 0.0;
  /// Token emissions allowed per frame in transducer search.
  int max_output_per_frame = 3;
  /// Longest hypothesis; 0 means the number of frames (label-synchronous) or
  /// unbounded (time-synchronous).
  int max_output_length = 0;
  /// Delta assigned when a prefix becomes unalignable.
  double zero_floor = kDefaultZeroFloor;
  /// Lower clamp of the alignment-score component in transducer search.
  double ali_floor = -1000.0;
  /// Stop label-synchronous search once recent finished hypotheses fall far
  /// behind the best one.
  bool end_detect = true;
  bool length_normalize = false;
  /// Entries kept in the returned list; 0 means `beam`.
  int nbest = 0;

  void validate() const;
  int nbest_size() const { return nbest > 0 ? nbest : beam; }
};

/// Output token alphabet and how it maps onto lexicon words. In word mode
/// every token is a lexicon word. In look-ahead (spelling) mode tokens are
/// characters of word spellings plus a separator that closes a word.
struct TokenInventory {
  std::shared_ptr<const SymbolTable> symbols;
  bool lookahead = false;
  LabelId separator = -1;

  static TokenInventory words(const Lexicon &lexicon);
  static TokenInventory spelling(const Lexicon &lexicon,
                                 std::string_view separator = "|");
  /// Look-ahead mode is on when `separator` is in the table.
  static TokenInventory from_symbols(std::shared_ptr<const SymbolTable> symbols,
                                     std::string_view separator = "|");

  std::vector<std::string> to_strings(std::span<const LabelId> tokens) const;
  std::vector<LabelId> to_ids(std::span<const std::string> tokens) const;
  /// Token rendering of a word sequence.
  std::vector<LabelId> tokens_of_words(std::span<const std::string> words) const;
  /// Lexicon words spelled by a complete token sequence. Throws Error(kOov)
  /// for segments that are not words.
  std::vector<std::string> words_of(std::span<const LabelId> tokens,
                                    const Lexicon &lexicon) const;
  /// Look-ahead split of a non-empty partial hypothesis. Throws
  /// Error(kDeadPrefix) or Error(kOov) when no word can complete it.
  PrefixSplit split_of(std::span<const LabelId> tokens,
                       const Lexicon &lexicon) const;
};

/// Everything the MMI scores of one utterance need.
struct MmiContext {
  const Emissions &phone_emissions;
  const Lexicon &lexicon;
  TopologyConfig topo;
  DenominatorCache den;

  static MmiContext make(const Emissions &phone_emissions,
                         const Lexicon &lexicon,
                         std::shared_ptr<const Fsa> g_den,
                         const TopologyConfig &topo = {});
};

/// Memoized MMI scores of token-id hypotheses for one utterance. Word-mode
/// prefixes are built by trellis extension of their parent.
class MmiHypothesisScorer {
 public:
  MmiHypothesisScorer(const MmiContext &context, const TokenInventory &tokens);

  /// Null when the prefix is dead.
  std::shared_ptr<const PrefixScoreCache> prefix(
      std::span<const LabelId> tokens);
  /// log P_MMI(tokens | first t frames); log-zero when dead or unalignable.
  double alignment(std::span<const LabelId> tokens, int t);
  /// log P_MMI(tokens | O) for a finished hypothesis; log-zero when the
  /// tokens do not spell complete words or cannot be aligned.
  double full_posterior(std::span<const LabelId> tokens);

 private:
  const MmiContext &context_;
  const TokenInventory &tokens_;
  std::map<std::vector<LabelId>, std::shared_ptr<const PrefixScoreCache>>
      prefixes_;
  std::map<std::vector<LabelId>, double> full_;
};

struct ScoreBreakdown {
  double base = 0.0;
  double lm = 0.0;
  double mmi = 0.0;
};

struct AedHypothesis {
  std::vector<LabelId> tokens;
  double score = 0.0;
  ScoreBreakdown parts;
  std::shared_ptr<const PrefixScoreCache> mmi_cache;
  bool finished = false;
};

struct NtHypothesis {
  std::vector<LabelId> tokens;
  /// Frames consumed.
  int frame = 0;
  /// Base (transducer) log score, summed over merged alignment paths.
  double base = 0.0;
  /// Alignment-score component for (tokens, frame); never summed on merge.
  double mmi = 0.0;
  double score = 0.0;
};

struct NBestEntry {
  std::vector<LabelId> tokens;
  double fused = 0.0;
  double base = 0.0;
  double mmi = 0.0;
  double lm = 0.0;
  /// Set when a score had to be floored (e.g. unalignable in rescoring).
  bool flagged = false;
};

struct NBestList {
  std::string id;
  std::vector<NBestEntry> entries;
  /// No hypothesis finished; the best unfinished one was returned.
  bool fallback = false;
};

/// Weighted sum of the breakdown; zero weights contribute nothing at all.
double fused_score(const ScoreBreakdown &parts, double lm_weight,
                   double mmi_weight);

/// Label-synchronous beam search. Each expansion adds the base score, the
/// weighted token-LM score and the weighted first-order difference of the
/// MMI prefix score; end-of-sentence adds the difference between the full
/// posterior and the prefix score.
NBestList aed_beam_search(const LabelSyncScorer &base,
                          const LabelSyncScorer *lm, const MmiContext &mmi,
                          const TokenInventory &tokens,
                          const DecodeConfig &cfg);

/// Merges hypotheses with identical token sequences at the same frame. Base
/// scores are log-summed; the MMI component is recomputed once for the
/// merged sequence by `mmi_component`. Output is sorted by score.
std::vector<NtHypothesis> merge_nt_hypotheses(
    std::vector<NtHypothesis> hyps,
    const std::function<double(std::span<const LabelId>)> &mmi_component,
    double mmi_weight);

/// Frame-synchronous transducer search: per frame, each hypothesis either
/// emits blank (advancing a frame) or up to max_output_per_frame tokens.
/// The MMI component of a hypothesis holding `tokens` after `frame` frames is
/// the alignment score over min(frame + 1, T) frames, clamped at ali_floor.
NBestList nt_alsd_beam_search(const TimeSyncScorer &base,
                              const MmiContext &mmi,
                              const TokenInventory &tokens,
                              const DecodeConfig &cfg);

/// Re-ranks by lambda * base + (1 - lambda) * MMI term (+ weighted LM). The
/// MMI term is the numerator log-likelihood, or the full log-posterior when
/// `den` is given; the two rankings agree because the denominator is shared.
NBestList rescore_nbest(const NBestList &nbest, const Emissions &phones,
                        const Lexicon &lexicon, const TopologyConfig &topo,
                        const TokenInventory &tokens, const DecodeConfig &cfg,
                        const DenominatorCache *den = nullptr);

}  // namespace lfmmi
