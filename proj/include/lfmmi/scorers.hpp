#pragma once

#include <Eigen/Core>

#include <map>
#include <span>
#include <vector>

#include "lfmmi/emissions.hpp"

namespace lfmmi {

/// Slot of the end-of-sentence outcome in label-synchronous distributions.
/// Label 0 is epsilon in emission alphabets, so the slot is otherwise unused.
inline constexpr LabelId kEndOfSentence = 0;

/// Label-synchronous base scorer (stand-in for an attention decoder or a
/// token LM). score_next returns a log-distribution indexed like the token
/// alphabet: entry 0 is end-of-sentence, entry 1 (blank) is log-zero, and
/// entries >= 2 are next tokens.
class LabelSyncScorer {
 public:
  virtual ~LabelSyncScorer() = default;
  virtual int vocab_size() const = 0;
  virtual Eigen::VectorXd score_next(std::span<const LabelId> prefix) const = 0;
};

/// Time-synchronous base scorer (stand-in for a transducer joint network).
/// score_joint returns a log-distribution over the token alphabet for the
/// hypothesis `tokens` at 0-based frame `frame`: entry 1 is blank, entries
/// >= 2 are tokens, entry 0 is log-zero.
class TimeSyncScorer {
 public:
  virtual ~TimeSyncScorer() = default;
  virtual int num_frames() const = 0;
  virtual int vocab_size() const = 0;
  virtual Eigen::VectorXd score_joint(int frame,
                                      std::span<const LabelId> tokens) const = 0;
};

/// CTC prefix probabilities over token emissions. Token c scores
/// log psi(g + c) - log psi(g), end-of-sentence scores log p(g) - log psi(g),
/// where psi is the probability that the labeling starts with g and p that it
/// equals g; the outcomes partition psi(g), so the distribution is exact.
class CtcPrefixScorer final : public LabelSyncScorer {
 public:
  explicit CtcPrefixScorer(Emissions token_emissions);

  int vocab_size() const override { return emissions_.alphabet_size(); }
  Eigen::VectorXd score_next(std::span<const LabelId> prefix) const override;

  /// log psi(prefix); 0 for the empty prefix.
  double prefix_log_prob(std::span<const LabelId> prefix) const;
  /// log p(prefix), the full-labeling probability.
  double full_log_prob(std::span<const LabelId> prefix) const;

 private:
  struct State {
    Eigen::VectorXd non_blank;  // r^n_t, t = 0..T
    Eigen::VectorXd blank;      // r^b_t
    double prefix_log_prob = 0.0;
  };
  State state_for(std::span<const LabelId> prefix) const;
  State extend(const State &state, LabelId last, LabelId token) const;

  Emissions emissions_;
};

/// Add-k token n-gram without acoustics. Contexts shorter than order - 1 are
/// padded with the sentence-start symbol.
class NgramTokenLm final : public LabelSyncScorer {
 public:
  NgramTokenLm(std::span<const std::vector<LabelId>> transcripts,
               int vocab_size, int order = 2, double k = 1.0);

  int vocab_size() const override { return vocab_size_; }
  Eigen::VectorXd score_next(std::span<const LabelId> prefix) const override;

 private:
  std::vector<LabelId> context_of(std::span<const LabelId> prefix) const;

  int vocab_size_;
  int order_;
  double k_;
  std::map<std::vector<LabelId>, Eigen::VectorXd> counts_;
};

/// Transducer stand-in backed by a T x (U+1) x V table of log-distributions.
/// Hypotheses longer than U read row U.
class TableJointScorer final : public TimeSyncScorer {
 public:
  /// `rows` is (T * (U+1)) x V, row index t * (U+1) + u.
  TableJointScorer(int num_frames, int num_positions, Eigen::MatrixXd rows);

  int num_frames() const override { return num_frames_; }
  int num_positions() const { return num_positions_; }
  int vocab_size() const override { return static_cast<int>(rows_.cols()); }
  const Eigen::MatrixXd &rows() const { return rows_; }
  Eigen::VectorXd score_joint(int frame,
                              std::span<const LabelId> tokens) const override;

 private:
  int num_frames_;
  int num_positions_;
  Eigen::MatrixXd rows_;
};

}  // namespace lfmmi
