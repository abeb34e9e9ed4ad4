#include "lfmmi/decoder.hpp"

#include <algorithm>
#include <set>

#include "lfmmi/error.hpp"

namespace lfmmi {
namespace {

constexpr double kZero = kLogZero<double>;

// Higher score first, then lexicographically smaller tokens.
template <typename Hyp>
bool better(const Hyp &a, const Hyp &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

// Reference behaviour of the common end detector: stop when, for each of the
// last `window` output lengths, the best hypothesis that ended at that length
// trails the overall best by more than `margin`.
bool should_stop(const std::vector<std::pair<int, double>> &ended, int step,
                 int window = 3, double margin = -10.0) {
  if (ended.empty()) return false;
  double best = kZero;
  for (const auto &[len, score] : ended) best = std::max(best, score);
  int count = 0;
  for (int m = 0; m < window; ++m) {
    double best_at = kZero;
    bool any = false;
    for (const auto &[len, score] : ended) {
      if (len == step - m) {
        any = true;
        best_at = std::max(best_at, score);
      }
    }
    if (any && best_at - best < margin) ++count;
  }
  return count == window;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam < 1) throw Error(ErrorCode::kInvalidArgument, "beam must be >= 1");
  for (double w : {mmi_prefix_weight, mmi_align_weight, rescore_lambda,
                   lm_weight, zero_floor, ali_floor}) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "weights must be finite");
    }
  }
  if (max_output_per_frame < 1 || max_output_length < 0 || nbest < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "output bounds must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// TokenInventory

TokenInventory TokenInventory::words(const Lexicon &lexicon) {
  auto table = std::make_shared<SymbolTable>();
  for (const std::string &word : lexicon.words()) table->add(word);
  return {std::move(table), false, -1};
}

TokenInventory TokenInventory::spelling(const Lexicon &lexicon,
                                        std::string_view separator) {
  std::set<char> chars;
  for (const std::string &word : lexicon.words()) {
    chars.insert(word.begin(), word.end());
  }
  auto table = std::make_shared<SymbolTable>();
  for (char c : chars) table->add(std::string(1, c));
  const LabelId sep = table->add(separator);
  return {std::move(table), true, sep};
}

TokenInventory TokenInventory::from_symbols(
    std::shared_ptr<const SymbolTable> symbols, std::string_view separator) {
  TokenInventory inv{std::move(symbols), false, -1};
  if (auto sep = inv.symbols->find(separator)) {
    inv.lookahead = true;
    inv.separator = *sep;
  }
  return inv;
}

std::vector<std::string> TokenInventory::to_strings(
    std::span<const LabelId> tokens) const {
  std::vector<std::string> out;
  for (LabelId t : tokens) out.push_back(symbols->symbol(t));
  return out;
}

std::vector<LabelId> TokenInventory::to_ids(
    std::span<const std::string> tokens) const {
  std::vector<LabelId> out;
  for (const std::string &t : tokens) out.push_back(symbols->id(t));
  return out;
}

std::vector<LabelId> TokenInventory::tokens_of_words(
    std::span<const std::string> words) const {
  if (!lookahead) return to_ids(words);
  std::vector<LabelId> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(separator);
    for (char c : words[i]) out.push_back(symbols->id(std::string(1, c)));
  }
  return out;
}

namespace {

// Splits spelling tokens at separators. Empty segments are kept so callers
// can decide whether they are legal.
std::vector<std::string> segments(const TokenInventory &inv,
                                  std::span<const LabelId> tokens) {
  std::vector<std::string> out(1);
  for (LabelId t : tokens) {
    if (t == inv.separator) {
      out.emplace_back();
    } else {
      out.back() += inv.symbols->symbol(t);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> TokenInventory::words_of(
    std::span<const LabelId> tokens, const Lexicon &lexicon) const {
  std::vector<std::string> words;
  if (!lookahead) {
    words = to_strings(tokens);
  } else {
    std::vector<std::string> parts = segments(*this, tokens);
    // Only the segment after the closing separator may be empty.
    if (!parts.empty() && parts.back().empty()) parts.pop_back();
    for (std::string &segment : parts) {
      if (segment.empty()) {
        throw Error(ErrorCode::kOov, "empty word between separators");
      }
      words.push_back(std::move(segment));
    }
  }
  for (const std::string &w : words) lexicon.pronunciation(w);
  return words;
}

PrefixSplit TokenInventory::split_of(std::span<const LabelId> tokens,
                                     const Lexicon &lexicon) const {
  if (!lookahead) {
    throw Error(ErrorCode::kInvalidArgument,
                "look-ahead splits need a spelling inventory");
  }
  std::vector<std::string> parts = segments(*this, tokens);
  const bool closed = !tokens.empty() && tokens.back() == separator;
  if (closed) parts.pop_back();
  for (const std::string &part : parts) {
    if (part.empty()) {
      throw Error(ErrorCode::kDeadPrefix, "empty word between separators");
    }
  }
  std::string prefix = std::move(parts.back());
  parts.pop_back();
  return make_prefix_split(std::move(parts), std::move(prefix), closed,
                           lexicon);
}

// ---------------------------------------------------------------------------
// MMI scoring of hypotheses

MmiContext MmiContext::make(const Emissions &phone_emissions,
                            const Lexicon &lexicon,
                            std::shared_ptr<const Fsa> g_den,
                            const TopologyConfig &topo) {
  return {phone_emissions, lexicon, topo,
          precompute_denominator(phone_emissions, std::move(g_den))};
}

MmiHypothesisScorer::MmiHypothesisScorer(const MmiContext &context,
                                         const TokenInventory &tokens)
    : context_(context), tokens_(tokens) {}

std::shared_ptr<const PrefixScoreCache> MmiHypothesisScorer::prefix(
    std::span<const LabelId> tokens) {
  std::vector<LabelId> key(tokens.begin(), tokens.end());
  if (auto it = prefixes_.find(key); it != prefixes_.end()) return it->second;

  std::shared_ptr<const PrefixScoreCache> cache;
  const Emissions &e = context_.phone_emissions;
  if (tokens.empty()) {
    cache = std::make_shared<const PrefixScoreCache>(
        root_prefix_score(e, context_.lexicon, context_.topo));
  } else if (!tokens_.lookahead) {
    auto parent = prefix(tokens.first(tokens.size() - 1));
    cache = std::make_shared<const PrefixScoreCache>(extend_prefix_score(
        *parent, tokens_.symbols->symbol(tokens.back()), e, context_.lexicon,
        context_.topo, context_.den));
  } else {
    try {
      const PrefixSplit split = tokens_.split_of(tokens, context_.lexicon);
      const std::vector<std::string> names = tokens_.to_strings(tokens);
      cache = std::make_shared<const PrefixScoreCache>(
          mmi_prefix_score(e, names, context_.lexicon, context_.topo,
                           context_.den, &split));
    } catch (const Error &err) {
      if (err.code() != ErrorCode::kDeadPrefix &&
          err.code() != ErrorCode::kOov) {
        throw;
      }
    }
  }
  prefixes_.emplace(std::move(key), cache);
  return cache;
}

double MmiHypothesisScorer::alignment(std::span<const LabelId> tokens, int t) {
  if (tokens.empty() && t == 0) return 0.0;
  auto cache = prefix(tokens);
  if (!cache) return kZero;
  return alignment_score_from_frames(cache->frame_finals, context_.den, t);
}

double MmiHypothesisScorer::full_posterior(std::span<const LabelId> tokens) {
  std::vector<LabelId> key(tokens.begin(), tokens.end());
  if (auto it = full_.find(key); it != full_.end()) return it->second;
  const int num_frames = context_.phone_emissions.num_frames();
  double value = kZero;
  if (!tokens_.lookahead) {
    value = alignment(tokens, num_frames);
  } else {
    try {
      const std::vector<std::string> words =
          tokens_.words_of(tokens, context_.lexicon);
      const Fsa graph = compile_numerator(words, context_.lexicon,
                                          context_.topo);
      value = alignment_score_from_frames(
          forward_frame_scores(graph, context_.phone_emissions), context_.den,
          num_frames);
    } catch (const Error &err) {
      if (err.code() != ErrorCode::kOov) throw;
    }
  }
  full_.emplace(std::move(key), value);
  return value;
}

double fused_score(const ScoreBreakdown &parts, double lm_weight,
                   double mmi_weight) {
  double score = parts.base;
  if (lm_weight != 0.0) score += lm_weight * parts.lm;
  if (mmi_weight != 0.0) score += mmi_weight * parts.mmi;
  return score;
}

// ---------------------------------------------------------------------------
// Label-synchronous search

NBestList aed_beam_search(const LabelSyncScorer &base,
                          const LabelSyncScorer *lm, const MmiContext &mmi,
                          const TokenInventory &tokens,
                          const DecodeConfig &cfg) {
  cfg.validate();
  const int vocab = base.vocab_size();
  if (vocab != tokens.symbols->size() || (lm && lm->vocab_size() != vocab)) {
    throw Error(ErrorCode::kInvalidArgument,
                "scorer vocabulary does not match the token inventory");
  }
  const bool use_lm = lm != nullptr && cfg.lm_weight != 0.0;
  const bool use_mmi = cfg.mmi_prefix_weight != 0.0;
  const int max_length = cfg.max_output_length > 0
                             ? cfg.max_output_length
                             : mmi.phone_emissions.num_frames();
  MmiHypothesisScorer mmi_scorer(mmi, tokens);

  AedHypothesis root;
  if (use_mmi) root.mmi_cache = mmi_scorer.prefix({});
  std::vector<AedHypothesis> active{root};
  std::vector<AedHypothesis> finished;
  std::vector<std::pair<int, double>> ended;

  for (int step = 1; step <= max_length + 1 && !active.empty(); ++step) {
    std::vector<AedHypothesis> candidates;
    for (const AedHypothesis &hyp : active) {
      const Eigen::VectorXd base_scores = base.score_next(hyp.tokens);
      Eigen::VectorXd lm_scores;
      if (use_lm) lm_scores = lm->score_next(hyp.tokens);
      for (LabelId c = 0; c < vocab; ++c) {
        if (c == kBlank || is_log_zero(base_scores(c))) continue;
        const bool eos = c == kEndOfSentence;
        // Hypotheses at the length bound may only end.
        if (!eos && step > max_length) continue;
        AedHypothesis child;
        child.tokens = hyp.tokens;
        if (!eos) child.tokens.push_back(c);
        child.finished = eos;
        child.parts = hyp.parts;
        child.parts.base += base_scores(c);
        if (use_lm) child.parts.lm += lm_scores(c);
        if (use_mmi) {
          double delta;
          if (eos) {
            delta = guarded_delta(hyp.mmi_cache->score,
                                  mmi_scorer.full_posterior(hyp.tokens),
                                  cfg.zero_floor);
          } else {
            child.mmi_cache = mmi_scorer.prefix(child.tokens);
            if (!child.mmi_cache) continue;
            delta = mmi_prefix_delta(*hyp.mmi_cache, *child.mmi_cache,
                                     cfg.zero_floor);
          }
          child.parts.mmi += delta;
        }
        child.score =
            fused_score(child.parts, use_lm ? cfg.lm_weight : 0.0,
                        cfg.mmi_prefix_weight);
        candidates.push_back(std::move(child));
      }
    }
    // Nothing can grow or end: keep the current beam for the fallback.
    if (candidates.empty()) break;
    std::sort(candidates.begin(), candidates.end(),
              better<AedHypothesis>);
    if (static_cast<int>(candidates.size()) > cfg.beam) {
      candidates.resize(cfg.beam);
    }
    active.clear();
    for (AedHypothesis &cand : candidates) {
      if (cand.finished) {
        ended.emplace_back(step, cand.score);
        finished.push_back(std::move(cand));
      } else {
        active.push_back(std::move(cand));
      }
    }
    if (cfg.end_detect && should_stop(ended, step)) break;
  }

  NBestList out;
  std::vector<AedHypothesis> &pool = finished.empty() ? active : finished;
  out.fallback = finished.empty();
  auto ranking = [&](const AedHypothesis &h) {
    return cfg.length_normalize
               ? h.score / static_cast<double>(h.tokens.size() + 1)
               : h.score;
  };
  std::sort(pool.begin(), pool.end(),
            [&](const AedHypothesis &a, const AedHypothesis &b) {
              const double ra = ranking(a), rb = ranking(b);
              if (ra != rb) return ra > rb;
              return a.tokens < b.tokens;
            });
  for (const AedHypothesis &h : pool) {
    if (static_cast<int>(out.entries.size()) == cfg.nbest_size()) break;
    out.entries.push_back(
        {h.tokens, h.score, h.parts.base, h.parts.mmi, h.parts.lm, false});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time-synchronous search

std::vector<NtHypothesis> merge_nt_hypotheses(
    std::vector<NtHypothesis> hyps,
    const std::function<double(std::span<const LabelId>)> &mmi_component,
    double mmi_weight) {
  std::map<std::vector<LabelId>, std::vector<double>> groups;
  int frame = hyps.empty() ? 0 : hyps.front().frame;
  for (NtHypothesis &h : hyps) {
    if (h.frame != frame) {
      throw Error(ErrorCode::kInvalidArgument,
                  "merging hypotheses from different frames");
    }
    groups[std::move(h.tokens)].push_back(h.base);
  }
  std::vector<NtHypothesis> merged;
  merged.reserve(groups.size());
  for (auto &[tokens, bases] : groups) {
    // Sorting makes the sum independent of arrival order.
    std::sort(bases.begin(), bases.end());
    NtHypothesis h;
    h.tokens = tokens;
    h.frame = frame;
    h.base = logsumexp(Eigen::Map<const Eigen::VectorXd>(
        bases.data(), static_cast<Eigen::Index>(bases.size())));
    h.mmi = mmi_weight != 0.0 ? mmi_component(h.tokens) : 0.0;
    h.score = mmi_weight != 0.0 ? h.base + mmi_weight * h.mmi : h.base;
    merged.push_back(std::move(h));
  }
  std::sort(merged.begin(), merged.end(), better<NtHypothesis>);
  return merged;
}

NBestList nt_alsd_beam_search(const TimeSyncScorer &base,
                              const MmiContext &mmi,
                              const TokenInventory &tokens,
                              const DecodeConfig &cfg) {
  cfg.validate();
  const int num_frames = base.num_frames();
  if (num_frames != mmi.phone_emissions.num_frames()) {
    throw Error(ErrorCode::kInvalidArgument,
                "transducer scorer and phone emissions differ in frame count");
  }
  const int vocab = base.vocab_size();
  if (vocab != tokens.symbols->size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "scorer vocabulary does not match the token inventory");
  }
  const double weight = cfg.mmi_align_weight;
  MmiHypothesisScorer mmi_scorer(mmi, tokens);
  auto component_at = [&](int frame) {
    return [&mmi_scorer, &cfg, frame,
            num_frames](std::span<const LabelId> toks) {
      const int t = std::min(frame + 1, num_frames);
      return std::max(mmi_scorer.alignment(toks, t), cfg.ali_floor);
    };
  };
  auto merge_and_prune = [&](std::vector<NtHypothesis> raw, int frame) {
    std::vector<NtHypothesis> merged =
        merge_nt_hypotheses(std::move(raw), component_at(frame), weight);
    if (static_cast<int>(merged.size()) > cfg.beam) merged.resize(cfg.beam);
    return merged;
  };

  std::vector<NtHypothesis> hyps = merge_and_prune({NtHypothesis{}}, 0);
  for (int frame = 0; frame < num_frames; ++frame) {
    std::vector<NtHypothesis> advanced;
    std::vector<NtHypothesis> current = hyps;
    for (int round = 0; round <= cfg.max_output_per_frame; ++round) {
      std::vector<NtHypothesis> emitted;
      for (const NtHypothesis &h : current) {
        const Eigen::VectorXd dist = base.score_joint(frame, h.tokens);
        if (!is_log_zero(dist(kBlank))) {
          advanced.push_back({h.tokens, frame + 1, h.base + dist(kBlank)});
        }
        const bool may_emit =
            round < cfg.max_output_per_frame &&
            (cfg.max_output_length == 0 ||
             static_cast<int>(h.tokens.size()) < cfg.max_output_length);
        if (!may_emit) continue;
        for (LabelId w = 2; w < vocab; ++w) {
          if (is_log_zero(dist(w))) continue;
          NtHypothesis child{h.tokens, frame, h.base + dist(w)};
          child.tokens.push_back(w);
          emitted.push_back(std::move(child));
        }
      }
      if (emitted.empty()) break;
      current = merge_and_prune(std::move(emitted), frame);
    }
    hyps = merge_and_prune(std::move(advanced), frame + 1);
  }

  NBestList out;
  for (const NtHypothesis &h : hyps) {
    if (static_cast<int>(out.entries.size()) == cfg.nbest_size()) break;
    out.entries.push_back({h.tokens, h.score, h.base, h.mmi, 0.0, false});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rescoring

NBestList rescore_nbest(const NBestList &nbest, const Emissions &phones,
                        const Lexicon &lexicon, const TopologyConfig &topo,
                        const TokenInventory &tokens, const DecodeConfig &cfg,
                        const DenominatorCache *den) {
  cfg.validate();
  const int num_frames = phones.num_frames();
  NBestList out = nbest;
  double worst = kZero;
  std::vector<bool> missing(out.entries.size(), false);
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    NBestEntry &entry = out.entries[i];
    double score = kZero;
    try {
      const Fsa graph =
          compile_numerator(tokens.words_of(entry.tokens, lexicon), lexicon,
                            topo);
      score = forward_frame_scores(graph, phones)[num_frames];
      if (den && !is_log_zero(score)) score -= (*den)[num_frames];
    } catch (const Error &err) {
      if (err.code() != ErrorCode::kOov) throw;
    }
    if (is_log_zero(score)) {
      missing[i] = true;
    } else {
      entry.mmi = score;
      worst = is_log_zero(worst) ? score : std::min(worst, score);
    }
  }
  // Unusable hypotheses sit `zero_floor` below the worst usable one.
  const double floor_value =
      is_log_zero(worst) ? cfg.zero_floor : worst + cfg.zero_floor;
  const double lambda = cfg.rescore_lambda;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    NBestEntry &entry = out.entries[i];
    if (missing[i]) {
      entry.mmi = floor_value;
      entry.flagged = true;
    }
    entry.fused = lambda * entry.base + (1.0 - lambda) * entry.mmi;
    if (cfg.lm_weight != 0.0) entry.fused += cfg.lm_weight * entry.lm;
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const NBestEntry &a, const NBestEntry &b) {
                     if (a.fused != b.fused) return a.fused > b.fused;
                     if (a.base != b.base) return a.base > b.base;
                     return a.tokens < b.tokens;
                   });
  return out;
}

}  // namespace lfmmi
