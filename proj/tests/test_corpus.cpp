#include "doctest.h"

#include <set>

#include "lfmmi/corpus.hpp"
#include "lfmmi/error.hpp"
#include "lfmmi/forward.hpp"
#include "lfmmi/graph_compiler.hpp"
#include "lfmmi/mmi_scorer.hpp"
#include "oracle.hpp"

using namespace lfmmi;

TEST_CASE("corpus generation is deterministic") {
  CorpusSpec spec;
  spec.num_utterances = 20;
  spec.seed = 42;
  const GeneratedCorpus a = generate_corpus(spec);
  const GeneratedCorpus b = generate_corpus(spec);
  CHECK(a.lexicon.words() == b.lexicon.words());
  CHECK(a.train == b.train);
  REQUIRE(a.test.size() == 20);
  for (std::size_t i = 0; i < a.test.size(); ++i) CHECK(a.test[i].words == b.test[i].words);
  spec.seed = 43;
  CHECK(generate_corpus(spec).lexicon.words() != a.lexicon.words());
}

TEST_CASE("overlap controls shared prefixes") {
  CorpusSpec spec;
  spec.overlap = 0;
  spec.seed = 5;
  const GeneratedCorpus none = generate_corpus(spec);
  std::set<std::vector<LabelId>> prons;
  for (const auto &w : none.lexicon.words()) prons.insert(none.lexicon.pronunciation(w));
  CHECK(static_cast<int>(prons.size()) == spec.num_words);

  spec.overlap = 1;
  const GeneratedCorpus some = generate_corpus(spec);
  bool prefix_pair = false;
  for (const auto &a : some.lexicon.words()) {
    for (const auto &b : some.lexicon.words()) {
      if (a != b && b.starts_with(a)) prefix_pair = true;
    }
  }
  CHECK(prefix_pair);
}

TEST_CASE("infeasible specs are rejected") {
  CorpusSpec spec;
  spec.num_phones = 2;
  spec.overlap = 0;
  spec.min_phones_per_word = spec.max_phones_per_word = 1;
  spec.num_words = 3;
  CHECK_THROWS_AS(generate_corpus(spec), Error);
  spec.num_words = 2;
  CHECK_NOTHROW(generate_corpus(spec));
  spec.tau = -1.0;
  CHECK_THROWS_AS(generate_corpus(spec), Error);
}

TEST_CASE("synthesized alignments collapse to the transcript") {
  for (bool spelling : {false, true}) {
    CorpusSpec spec;
    spec.num_utterances = 30;
    spec.seed = 9;
    spec.spelling = spelling;
    const GeneratedCorpus corpus = generate_corpus(spec);
    const TokenInventory inv = spelling ? TokenInventory::spelling(corpus.lexicon)
                                        : TokenInventory::words(corpus.lexicon);
    for (std::size_t i = 0; i < corpus.test.size(); ++i) {
      const auto &words = corpus.test[i].words;
      const AlignedUtterance a = synthesize_emissions(words, corpus.lexicon, inv, 0.7, i);
      CHECK(oracle::ctc_collapse(a.phone_alignment) == expand_to_phones(words, corpus.lexicon));
      CHECK(oracle::ctc_collapse(a.token_alignment) == a.tokens);
      CHECK(a.tokens == inv.tokens_of_words(words));
      CHECK(static_cast<int>(a.emission_frames.size()) == static_cast<int>(a.tokens.size()));
      CHECK(std::is_sorted(a.emission_frames.begin(), a.emission_frames.end()));
      // One-hot emissions of the alignment are accepted by the numerator.
      Eigen::MatrixXd onehot =
          Eigen::MatrixXd::Constant(a.num_frames(), corpus.lexicon.phones().size(), -30.0);
      onehot.col(0).setConstant(kLogZero<double>);
      for (int t = 0; t < a.num_frames(); ++t) onehot(t, a.phone_alignment[t]) = 0.0;
      const Emissions e = Emissions::from_logits(onehot);
      const Fsa num = compile_numerator(words, corpus.lexicon);
      CHECK(forward_frame_scores(num, e)[a.num_frames()] > -1.0);
    }
  }
}

TEST_CASE("noise-free rows peak on the aligned symbol") {
  CorpusSpec spec;
  spec.num_utterances = 5;
  const GeneratedCorpus corpus = generate_corpus(spec);
  const TokenInventory inv = TokenInventory::words(corpus.lexicon);
  for (const Utterance &u : corpus.test) {
    const AlignedUtterance a = synthesize_emissions(u.words, corpus.lexicon, inv, 0.0, 1);
    for (int t = 0; t < a.num_frames(); ++t) {
      Eigen::Index arg;
      a.phone_emissions.logp().row(t).maxCoeff(&arg);
      CHECK(arg == a.phone_alignment[t]);
      a.token_emissions.logp().row(t).maxCoeff(&arg);
      CHECK(arg == a.token_alignment[t]);
    }
  }
}

TEST_CASE("noise-free posterior prefers the true transcript") {
  // Three words, every competitor transcript with the same word count.
  auto phones = std::make_shared<SymbolTable>();
  for (const char *p : {"a", "b", "c"}) phones->add(p);
  Lexicon lex(phones);
  lex.add("ab", {2, 3});
  lex.add("ba", {3, 2});
  lex.add("c", {4});
  const TokenInventory inv = TokenInventory::words(lex);
  const std::vector<std::vector<std::string>> train{{"ab", "c"}, {"ba"}, {"c", "ab"}};
  const auto den = std::make_shared<const Fsa>(compile_denominator(estimate_phone_bigram(train, lex)));
  const std::vector<std::string> truth{"ab", "c"};
  const AlignedUtterance a = synthesize_emissions(truth, lex, inv, 0.0, 4);
  const DenominatorCache cache = precompute_denominator(a.phone_emissions, den);
  const double best = mmi_log_posterior(a.phone_emissions, compile_numerator(truth, lex), cache);
  for (const auto &w1 : lex.words()) {
    for (const auto &w2 : lex.words()) {
      const std::vector<std::string> other{w1, w2};
      if (other == truth) continue;
      const double score = forward_frame_scores(compile_numerator(other, lex),
                                                a.phone_emissions)[a.num_frames()];
      if (!is_log_zero(score)) CHECK(score - cache[a.num_frames()] < best);
    }
  }
}

TEST_CASE("error rate bookkeeping") {
  using V = std::vector<std::string>;
  const ErrorRate same = edit_errors(V{"a", "b"}, V{"a", "b"});
  CHECK(same.errors() == 0);
  CHECK(same.rate() == 0.0);
  const ErrorRate empty = edit_errors(V{}, V{"a", "b", "c", "d"});
  CHECK(empty.deletions == 4);
  CHECK(empty.rate() == 1.0);
  const ErrorRate mixed = edit_errors(V{"a", "b", "c"}, V{"a", "x", "c", "d"});
  CHECK(mixed.substitutions == 1);
  CHECK(mixed.deletions == 1);
  CHECK(mixed.insertions == 0);
  CHECK(mixed.rate() == 0.5);
  const ErrorRate extra = edit_errors(V{"a", "a", "b"}, V{"a", "b"});
  CHECK(extra.insertions == 1);
  const std::vector<V> hyps{V{"a"}, V{"b", "c"}};
  const std::vector<V> refs{V{"a"}, V{"b"}};
  const ErrorRate total = evaluate_error_rate(hyps, refs);
  CHECK(total.ref_tokens == 2);
  CHECK(total.insertions == 1);
  CHECK(total.rate() == 0.5);
  CHECK_THROWS_AS(evaluate_error_rate(hyps, std::vector<V>{}), Error);
}
