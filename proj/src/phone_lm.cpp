#include "lfmmi/phone_lm.hpp"

#include <cmath>

#include "lfmmi/error.hpp"
#include "lfmmi/log_weight.hpp"

namespace lfmmi {

PhoneBigramLm::PhoneBigramLm(int num_phones, Eigen::MatrixXd logp)
    : num_phones_(num_phones), table_(std::move(logp)) {
  if (num_phones_ < 1 || table_.rows() != num_phones_ + 1 ||
      table_.cols() != num_phones_ + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "phone LM table must be (num_phones + 1) square");
  }
  for (Eigen::Index r = 0; r < table_.rows(); ++r) {
    const double mass = logsumexp(table_.row(r));
    if (!(std::abs(mass) <= kNormTolerance)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "phone LM context row " + std::to_string(r) +
                      " is not normalized (log mass " + std::to_string(mass) +
                      ")");
    }
  }
}

std::vector<LabelId> PhoneBigramLm::phone_ids() const {
  std::vector<LabelId> ids;
  for (int i = 0; i < num_phones_; ++i) ids.push_back(i + 2);
  return ids;
}

PhoneBigramLm estimate_phone_bigram(
    std::span<const std::vector<std::string>> transcripts,
    const Lexicon &lexicon, double k) {
  if (!(k > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing k must be positive");
  }
  const int n = lexicon.num_phones();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (const auto &transcript : transcripts) {
    const std::vector<LabelId> phones = expand_to_phones(transcript, lexicon);
    Eigen::Index prev = 0;
    for (LabelId phone : phones) {
      counts(prev, phone - 1) += 1.0;
      prev = phone - 1;
    }
    counts(prev, 0) += 1.0;
  }
  Eigen::MatrixXd logp(n + 1, n + 1);
  for (Eigen::Index r = 0; r <= n; ++r) {
    const double denom = counts.row(r).sum() + k * (n + 1);
    logp.row(r) = ((counts.row(r).array() + k) / denom).log();
  }
  return PhoneBigramLm(n, std::move(logp));
}

}  // namespace lfmmi
