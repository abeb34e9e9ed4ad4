#include "lfmmi/scorers.hpp"

#include <algorithm>

#include "lfmmi/error.hpp"
#include "lfmmi/log_weight.hpp"

namespace lfmmi {
namespace {

constexpr double kZero = kLogZero<double>;

double add(double a, double b) {
  return (is_log_zero(a) || is_log_zero(b)) ? kZero : a + b;
}

}  // namespace

CtcPrefixScorer::CtcPrefixScorer(Emissions token_emissions)
    : emissions_(std::move(token_emissions)) {}

CtcPrefixScorer::State CtcPrefixScorer::extend(const State &state,
                                               LabelId last,
                                               LabelId token) const {
  const int num_frames = emissions_.num_frames();
  State next{Eigen::VectorXd::Constant(num_frames + 1, kZero),
             Eigen::VectorXd::Constant(num_frames + 1, kZero), kZero};
  for (int t = 1; t <= num_frames; ++t) {
    // Mass that can start emitting `token` at frame t.
    const double phi = token == last
                           ? state.blank(t - 1)
                           : log_add(state.blank(t - 1), state.non_blank(t - 1));
    const double y = emissions_(t - 1, token);
    next.non_blank(t) = add(log_add(next.non_blank(t - 1), phi), y);
    next.blank(t) = add(log_add(next.blank(t - 1), next.non_blank(t - 1)),
                        emissions_(t - 1, kBlank));
    next.prefix_log_prob = log_add(next.prefix_log_prob, add(phi, y));
  }
  return next;
}

CtcPrefixScorer::State CtcPrefixScorer::state_for(
    std::span<const LabelId> prefix) const {
  const int num_frames = emissions_.num_frames();
  State state{Eigen::VectorXd::Constant(num_frames + 1, kZero),
              Eigen::VectorXd::Constant(num_frames + 1, kZero), 0.0};
  state.blank(0) = 0.0;
  for (int t = 1; t <= num_frames; ++t) {
    state.blank(t) = state.blank(t - 1) + emissions_(t - 1, kBlank);
  }
  LabelId last = -1;
  for (LabelId token : prefix) {
    if (token < 2 || token >= vocab_size()) {
      throw Error(ErrorCode::kInvalidArgument, "token id out of range");
    }
    state = extend(state, last, token);
    last = token;
  }
  return state;
}

double CtcPrefixScorer::prefix_log_prob(
    std::span<const LabelId> prefix) const {
  return state_for(prefix).prefix_log_prob;
}

double CtcPrefixScorer::full_log_prob(std::span<const LabelId> prefix) const {
  const State state = state_for(prefix);
  const int num_frames = emissions_.num_frames();
  return log_add(state.non_blank(num_frames), state.blank(num_frames));
}

Eigen::VectorXd CtcPrefixScorer::score_next(
    std::span<const LabelId> prefix) const {
  const State state = state_for(prefix);
  const int num_frames = emissions_.num_frames();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(vocab_size(), kZero);
  if (is_log_zero(state.prefix_log_prob)) return out;
  const LabelId last = prefix.empty() ? -1 : prefix.back();
  out(kEndOfSentence) =
      add(log_add(state.non_blank(num_frames), state.blank(num_frames)),
          -state.prefix_log_prob);
  for (LabelId c = 2; c < vocab_size(); ++c) {
    out(c) = add(extend(state, last, c).prefix_log_prob,
                 -state.prefix_log_prob);
  }
  return out;
}

NgramTokenLm::NgramTokenLm(std::span<const std::vector<LabelId>> transcripts,
                           int vocab_size, int order, double k)
    : vocab_size_(vocab_size), order_(order), k_(k) {
  if (order_ < 1 || !(k_ > 0) || vocab_size_ < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "n-gram LM needs order >= 1, k > 0 and at least one token");
  }
  for (const auto &transcript : transcripts) {
    std::vector<LabelId> history;
    auto count = [&](LabelId outcome) {
      auto [it, inserted] = counts_.try_emplace(context_of(history));
      if (inserted) it->second = Eigen::VectorXd::Zero(vocab_size_);
      it->second(outcome) += 1.0;
    };
    for (LabelId token : transcript) {
      if (token < 2 || token >= vocab_size_) {
        throw Error(ErrorCode::kInvalidArgument, "token id out of range");
      }
      count(token);
      history.push_back(token);
    }
    count(kEndOfSentence);
  }
}

std::vector<LabelId> NgramTokenLm::context_of(
    std::span<const LabelId> prefix) const {
  // Start padding uses -1, which no token can take.
  std::vector<LabelId> context(order_ - 1, -1);
  const int take = std::min<int>(order_ - 1, static_cast<int>(prefix.size()));
  std::copy(prefix.end() - take, prefix.end(), context.end() - take);
  return context;
}

Eigen::VectorXd NgramTokenLm::score_next(
    std::span<const LabelId> prefix) const {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(vocab_size_);
  if (auto it = counts_.find(context_of(prefix)); it != counts_.end()) {
    counts = it->second;
  }
  // Outcomes are end-of-sentence plus the real tokens; blank is excluded.
  const double denom = counts.sum() + k_ * (vocab_size_ - 1);
  Eigen::VectorXd out = ((counts.array() + k_) / denom).log();
  out(kBlank) = kZero;
  return out;
}

TableJointScorer::TableJointScorer(int num_frames, int num_positions,
                                   Eigen::MatrixXd rows)
    : num_frames_(num_frames),
      num_positions_(num_positions),
      rows_(std::move(rows)) {
  if (num_frames_ < 1 || num_positions_ < 1 ||
      rows_.rows() != static_cast<Eigen::Index>(num_frames_) * num_positions_ ||
      rows_.cols() < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "transducer table shape does not match T x (U+1) x V");
  }
  for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
    const double mass = logsumexp(rows_.row(r));
    if (!(std::abs(mass) < 1e-6)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "transducer table row " + std::to_string(r) +
                      " is not normalized");
    }
  }
}

Eigen::VectorXd TableJointScorer::score_joint(
    int frame, std::span<const LabelId> tokens) const {
  if (frame < 0 || frame >= num_frames_) {
    throw Error(ErrorCode::kInvalidArgument, "frame out of range");
  }
  const int u = std::min<int>(static_cast<int>(tokens.size()),
                              num_positions_ - 1);
  Eigen::VectorXd out = rows_.row(frame * num_positions_ + u).transpose();
  out(kEpsilon) = kZero;
  return out;
}

}  // namespace lfmmi
