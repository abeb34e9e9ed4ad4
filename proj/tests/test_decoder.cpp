#include "doctest.h"

#include <algorithm>
#include <random>

#include "lfmmi/corpus.hpp"
#include "lfmmi/decoder.hpp"
#include "lfmmi/error.hpp"
#include "oracle.hpp"

using namespace lfmmi;

namespace {

struct Fixture {
  GeneratedCorpus corpus;
  TokenInventory tokens;
  std::shared_ptr<const Fsa> den;
};

Fixture fixture(bool spelling, std::uint64_t seed = 3) {
  CorpusSpec spec;
  spec.num_words = 6;
  spec.num_phones = 5;
  spec.num_utterances = 4;
  spec.num_train = 50;
  spec.seed = seed;
  spec.spelling = spelling;
  GeneratedCorpus corpus = generate_corpus(spec);
  TokenInventory tokens = spelling ? TokenInventory::spelling(corpus.lexicon)
                                   : TokenInventory::words(corpus.lexicon);
  auto den = std::make_shared<const Fsa>(
      compile_denominator(estimate_phone_bigram(corpus.train, corpus.lexicon)));
  return {std::move(corpus), std::move(tokens), std::move(den)};
}

// Never lets a hypothesis end.
class EndlessScorer final : public LabelSyncScorer {
 public:
  explicit EndlessScorer(int vocab) : vocab_(vocab) {}
  int vocab_size() const override { return vocab_; }
  Eigen::VectorXd score_next(std::span<const LabelId>) const override {
    Eigen::VectorXd d = Eigen::VectorXd::Constant(vocab_, -std::log(vocab_ - 2.0));
    d(kEndOfSentence) = d(kBlank) = kLogZero<double>;
    return d;
  }

 private:
  int vocab_;
};

bool same_lists(const NBestList &a, const NBestList &b) {
  if (a.entries.size() != b.entries.size() || a.fallback != b.fallback) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto &x = a.entries[i], &y = b.entries[i];
    if (x.tokens != y.tokens || x.fused != y.fused || x.base != y.base) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("token inventory splits spelling prefixes") {
  const Fixture f = fixture(true);
  const TokenInventory &inv = f.tokens;
  const Lexicon &lex = f.corpus.lexicon;
  const std::string w0 = lex.words()[0], w1 = lex.words()[1];
  const std::vector<std::string> words{w0, w1};
  const auto ids = inv.tokens_of_words(words);
  CHECK(ids.size() == w0.size() + w1.size() + 1);
  CHECK(inv.words_of(ids, lex) == words);
  const std::vector<LabelId> lone{inv.separator};
  CHECK_THROWS_AS(inv.words_of(lone, lex), Error);

  std::vector<LabelId> closed = inv.tokens_of_words(std::vector<std::string>{w0});
  closed.push_back(inv.separator);
  const PrefixSplit s1 = inv.split_of(closed, lex);
  CHECK(s1.complete);
  CHECK(s1.prefix == w0);
  CHECK(s1.context.empty());

  const std::vector<LabelId> partial(ids.begin(), ids.begin() + w0.size() + 2);
  const PrefixSplit s2 = inv.split_of(partial, lex);
  CHECK_FALSE(s2.complete);
  CHECK(s2.context == std::vector<std::string>{w0});
  CHECK(s2.prefix == w1.substr(0, 1));

  const std::vector<LabelId> doubled{ids[0], inv.separator, inv.separator};
  CHECK_THROWS_AS(inv.split_of(doubled, lex), Error);
}

TEST_CASE("zero MMI weights leave only the base score") {
  for (bool spelling : {false, true}) {
    const Fixture f = fixture(spelling);
    for (const Utterance &u : f.corpus.test) {
      const AlignedUtterance a =
          synthesize_emissions(u.words, f.corpus.lexicon, f.tokens, 0.6, 11);
      const MmiContext ctx = MmiContext::make(a.phone_emissions, f.corpus.lexicon, f.den);
      DecodeConfig zero;
      zero.mmi_prefix_weight = 0.0;
      zero.mmi_align_weight = 0.0;
      const CtcPrefixScorer ctc(a.token_emissions);
      const NBestList x = aed_beam_search(ctc, nullptr, ctx, f.tokens, zero);
      for (const auto &e : x.entries) CHECK(e.fused == e.base);
      const TableJointScorer joint(a.num_frames(), a.num_positions(), a.joint_rows);
      const NBestList y = nt_alsd_beam_search(joint, ctx, f.tokens, zero);
      for (const auto &e : y.entries) CHECK(e.fused == e.base);
    }
  }
}

TEST_CASE("noise-free emissions decode the reference") {
  for (bool spelling : {false, true}) {
    const Fixture f = fixture(spelling);
    for (const Utterance &u : f.corpus.test) {
      const AlignedUtterance a =
          synthesize_emissions(u.words, f.corpus.lexicon, f.tokens, 0.0, 5);
      const MmiContext ctx = MmiContext::make(a.phone_emissions, f.corpus.lexicon, f.den);
      const CtcPrefixScorer ctc(a.token_emissions);
      const NBestList x = aed_beam_search(ctc, nullptr, ctx, f.tokens, {});
      REQUIRE_FALSE(x.entries.empty());
      CHECK(x.entries[0].tokens == a.tokens);
      const TableJointScorer joint(a.num_frames(), a.num_positions(), a.joint_rows);
      const NBestList y = nt_alsd_beam_search(joint, ctx, f.tokens, {});
      REQUIRE_FALSE(y.entries.empty());
      CHECK(y.entries[0].tokens == a.tokens);
    }
  }
}

TEST_CASE("fused score is the weighted breakdown") {
  const Fixture f = fixture(false);
  const Utterance &u = f.corpus.test[0];
  const AlignedUtterance a = synthesize_emissions(u.words, f.corpus.lexicon, f.tokens, 0.5, 2);
  const MmiContext ctx = MmiContext::make(a.phone_emissions, f.corpus.lexicon, f.den);
  std::vector<std::vector<LabelId>> train;
  for (const auto &t : f.corpus.train) train.push_back(f.tokens.tokens_of_words(t));
  const NgramTokenLm lm(train, f.tokens.symbols->size());
  DecodeConfig cfg;
  cfg.lm_weight = 0.4;
  const NBestList x =
      aed_beam_search(CtcPrefixScorer(a.token_emissions), &lm, ctx, f.tokens, cfg);
  for (const auto &e : x.entries) {
    CHECK(e.fused == doctest::Approx(e.base + 0.4 * e.lm + cfg.mmi_prefix_weight * e.mmi)
                         .epsilon(1e-12));
  }
  for (std::size_t i = 1; i < x.entries.size(); ++i) {
    CHECK(x.entries[i - 1].fused >= x.entries[i].fused);
  }
}

TEST_CASE("search without a finished hypothesis falls back") {
  const Fixture f = fixture(false);
  const AlignedUtterance a =
      synthesize_emissions(f.corpus.test[0].words, f.corpus.lexicon, f.tokens, 0.5, 2);
  const MmiContext ctx = MmiContext::make(a.phone_emissions, f.corpus.lexicon, f.den);
  DecodeConfig cfg;
  cfg.max_output_length = 2;
  const NBestList x = aed_beam_search(EndlessScorer(f.tokens.symbols->size()), nullptr, ctx,
                                      f.tokens, cfg);
  CHECK(x.fallback);
  REQUIRE_FALSE(x.entries.empty());
  CHECK(x.entries[0].tokens.size() == 2);
}

TEST_CASE("merging sums base scores once and recomputes the MMI part") {
  int calls = 0;
  auto component = [&](std::span<const LabelId> tokens) {
    ++calls;
    return -0.5 * static_cast<double>(tokens.size());
  };
  std::vector<NtHypothesis> hyps{
      {{2, 3}, 4, -1.0}, {{2, 3}, 4, -2.0}, {{2}, 4, -0.3}, {{2, 3}, 4, -1.5}};
  const auto merged = merge_nt_hypotheses(hyps, component, 0.2);
  REQUIRE(merged.size() == 2);
  CHECK(calls == 2);
  const auto &m = merged[0].tokens.size() == 2 ? merged[0] : merged[1];
  const double expected = std::log(std::exp(-1.0) + std::exp(-2.0) + std::exp(-1.5));
  CHECK(m.base == doctest::Approx(expected).epsilon(1e-14));
  CHECK(m.mmi == -1.0);
  CHECK(m.score == doctest::Approx(expected - 0.2).epsilon(1e-14));
  hyps.push_back({{2}, 5, 0.0});
  CHECK_THROWS_AS(merge_nt_hypotheses(hyps, component, 0.2), Error);
}

TEST_CASE("rescoring orders") {
  const Fixture f = fixture(false);
  const Utterance &u = f.corpus.test[1];
  const AlignedUtterance a = synthesize_emissions(u.words, f.corpus.lexicon, f.tokens, 0.8, 9);
  const MmiContext ctx = MmiContext::make(a.phone_emissions, f.corpus.lexicon, f.den);
  DecodeConfig base_cfg;
  base_cfg.mmi_prefix_weight = 0.0;
  const NBestList nbest =
      aed_beam_search(CtcPrefixScorer(a.token_emissions), nullptr, ctx, f.tokens, base_cfg);
  REQUIRE(nbest.entries.size() > 2);

  DecodeConfig cfg;
  cfg.rescore_lambda = 1.0;
  const NBestList same =
      rescore_nbest(nbest, a.phone_emissions, f.corpus.lexicon, {}, f.tokens, cfg);
  for (std::size_t i = 0; i < nbest.entries.size(); ++i) {
    CHECK(same.entries[i].tokens == nbest.entries[i].tokens);
  }

  cfg.rescore_lambda = 0.0;
  const NBestList by_num =
      rescore_nbest(nbest, a.phone_emissions, f.corpus.lexicon, {}, f.tokens, cfg);
  for (std::size_t i = 1; i < by_num.entries.size(); ++i) {
    CHECK(by_num.entries[i - 1].mmi >= by_num.entries[i].mmi);
  }

  cfg.rescore_lambda = 0.8;
  const NBestList without =
      rescore_nbest(nbest, a.phone_emissions, f.corpus.lexicon, {}, f.tokens, cfg);
  const NBestList with = rescore_nbest(nbest, a.phone_emissions, f.corpus.lexicon, {},
                                       f.tokens, cfg, &ctx.den);
  for (std::size_t i = 0; i < with.entries.size(); ++i) {
    CHECK(with.entries[i].tokens == without.entries[i].tokens);
  }
}

TEST_CASE("unalignable hypotheses are floored and flagged") {
  const Fixture f = fixture(false);
  const AlignedUtterance a =
      synthesize_emissions(f.corpus.test[0].words, f.corpus.lexicon, f.tokens, 0.5, 1);
  NBestList nbest;
  nbest.entries.push_back({a.tokens, 0.0, -1.0, 0.0, 0.0, false});
  std::vector<LabelId> too_long;
  while (static_cast<int>(too_long.size()) <= a.num_frames()) too_long.push_back(2);
  nbest.entries.push_back({too_long, 0.0, -0.5, 0.0, 0.0, false});
  const NBestList r =
      rescore_nbest(nbest, a.phone_emissions, f.corpus.lexicon, {}, f.tokens, {});
  REQUIRE(r.entries.size() == 2);
  CHECK_FALSE(r.entries[0].flagged);
  CHECK(r.entries[1].flagged);
  CHECK(r.entries[1].mmi == doctest::Approx(r.entries[0].mmi + kDefaultZeroFloor));
}

TEST_CASE("decode configuration validation") {
  DecodeConfig cfg;
  cfg.beam = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.beam = 3;
  cfg.mmi_prefix_weight = std::nan("");
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.mmi_prefix_weight = 0.3;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.nbest_size() == 3);
}
