#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "lfmmi/lexicon.hpp"

namespace lfmmi {

/// Phone bigram. Label 0 doubles as the sentence boundary: as a context it
/// is <s>, as an outcome it is </s>. Real phones use their phone-table ids.
class PhoneBigramLm {
 public:
  static constexpr LabelId kBoundary = 0;
  static constexpr double kNormTolerance = 1e-9;

  /// `logp` is (num_phones + 1) square: row 0 is the <s> context, column 0
  /// the </s> outcome, and index i >= 1 is phone id i + 1. Every row must
  /// log-sum to zero.
  PhoneBigramLm(int num_phones, Eigen::MatrixXd logp);

  int num_phones() const { return num_phones_; }
  /// log P(next | context); either side may be kBoundary.
  double logp(LabelId context, LabelId next) const {
    return table_(index(context), index(next));
  }
  const Eigen::MatrixXd &table() const { return table_; }

  /// Phone ids 2 .. num_phones + 1.
  std::vector<LabelId> phone_ids() const;

 private:
  static Eigen::Index index(LabelId id) { return id == kBoundary ? 0 : id - 1; }

  int num_phones_;
  Eigen::MatrixXd table_;
};

/// Add-k smoothed bigram over the lexicon expansion of each transcript,
/// including <s> and </s> events. Throws Error(kOov) naming unknown tokens.
PhoneBigramLm estimate_phone_bigram(
    std::span<const std::vector<std::string>> transcripts,
    const Lexicon &lexicon, double k = 1.0);

}  // namespace lfmmi
