#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfmmi/decoder.hpp"
#include "lfmmi/emissions.hpp"
#include "lfmmi/lexicon.hpp"

namespace lfmmi {

struct CorpusSpec {
  int num_words = 12;
  int min_phones_per_word = 2;
  int max_phones_per_word = 3;
  int min_words_per_utterance = 2;
  int max_words_per_utterance = 4;
  /// Test utterances.
  int num_utterances = 200;
  /// Text-only utterances for phone LM estimation.
  int num_train = 500;
  /// Phones are named a, b, c, ...; at most 26.
  int num_phones = 8;
  /// Emission noise temperature.
  double tau = 1.0;
  /// Words are generated in pairs whose pronunciations share this many
  /// leading phones; when positive the first pair is a strict prefix pair.
  int overlap = 1;
  std::uint64_t seed = 0;
  double mean_phone_duration = 2.0;
  /// Tokens are word spellings plus a separator instead of whole words.
  bool spelling = false;

  /// Throws Error(kInvalidArgument), including when num_words exceeds the
  /// number of distinct pronunciations.
  void validate() const;
};

struct Utterance {
  std::string id;
  std::vector<std::string> words;
};

/// Word names are the phone symbols of their pronunciation, so spellings and
/// pronunciations coincide.
struct GeneratedCorpus {
  Lexicon lexicon;
  std::vector<std::vector<std::string>> train;
  std::vector<Utterance> test;
};

GeneratedCorpus generate_corpus(const CorpusSpec &spec);

/// Seed of the index-th utterance of a corpus.
std::uint64_t utterance_seed(std::uint64_t corpus_seed, std::uint64_t index);

struct AlignedUtterance {
  std::vector<std::string> words;
  std::vector<LabelId> tokens;
  /// Phone id or blank per frame; collapses to the lexicon expansion.
  std::vector<LabelId> phone_alignment;
  /// Token id or blank per frame; collapses to `tokens`.
  std::vector<LabelId> token_alignment;
  /// Frame at which the transducer table emits each token.
  std::vector<int> emission_frames;
  Emissions phone_emissions;
  Emissions token_emissions;
  /// T * (U+1) rows of transducer log-distributions; see TableJointScorer.
  Eigen::MatrixXd joint_rows;

  int num_frames() const { return phone_emissions.num_frames(); }
  int num_positions() const { return static_cast<int>(tokens.size()) + 1; }
};

/// Samples a CTC alignment with geometric durations and draws independent
/// noisy posteriors for phones, tokens and transducer rows. Each row is
/// softmax(onehot / max(tau, 0.01) + tau * N(0, 1)).
AlignedUtterance synthesize_emissions(std::span<const std::string> words,
                                      const Lexicon &lexicon,
                                      const TokenInventory &tokens,
                                      double tau, std::uint64_t seed,
                                      double mean_phone_duration = 2.0);

struct ErrorRate {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long ref_tokens = 0;

  long errors() const { return substitutions + insertions + deletions; }
  /// errors / ref_tokens; 0 when there are no reference tokens and no errors.
  double rate() const;
  ErrorRate &operator+=(const ErrorRate &other);
};

/// Unit-cost edit distance of one hypothesis against its reference. Among
/// minimal alignments, substitutions are preferred over deletions over
/// insertions when attributing error types.
ErrorRate edit_errors(std::span<const std::string> hyp,
                      std::span<const std::string> ref);

/// Throws Error(kInvalidArgument) when the lists differ in length.
ErrorRate evaluate_error_rate(
    std::span<const std::vector<std::string>> hyps,
    std::span<const std::vector<std::string>> refs);

}  // namespace lfmmi
