#pragma once

#include <Eigen/Core>

#include <memory>

#include "lfmmi/symbol_table.hpp"

namespace lfmmi {

/// Per-frame natural-log label posteriors, T x V. Column 0 (epsilon) is never
/// consumed and column 1 is blank. Rows are validated as normalized.
class Emissions {
 public:
  static constexpr double kRowTolerance = 1e-6;

  explicit Emissions(Eigen::MatrixXd logp,
                     std::shared_ptr<const SymbolTable> alphabet = nullptr);

  /// Row-wise log-softmax of unnormalized scores. Entries equal to -inf stay
  /// -inf.
  static Emissions from_logits(const Eigen::MatrixXd &logits,
                               std::shared_ptr<const SymbolTable> alphabet =
                                   nullptr);

  int num_frames() const { return static_cast<int>(logp_.rows()); }
  int alphabet_size() const { return static_cast<int>(logp_.cols()); }
  const Eigen::MatrixXd &logp() const { return logp_; }
  double operator()(int frame, LabelId label) const {
    return logp_(frame, label);
  }
  const SymbolTable *alphabet() const { return alphabet_.get(); }

  /// Frames [0, num_frames) as a new emissions object.
  Emissions head(int num_frames) const;

 private:
  Eigen::MatrixXd logp_;
  std::shared_ptr<const SymbolTable> alphabet_;
};

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd &logits);

}  // namespace lfmmi
