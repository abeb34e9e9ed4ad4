#include "lfmmi/emissions.hpp"

#include <cmath>
#include <string>

#include "lfmmi/error.hpp"
#include "lfmmi/log_weight.hpp"

namespace lfmmi {

Emissions::Emissions(Eigen::MatrixXd logp,
                     std::shared_ptr<const SymbolTable> alphabet)
    : logp_(std::move(logp)), alphabet_(std::move(alphabet)) {
  if (logp_.rows() < 1 || logp_.cols() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "emissions need T >= 1 and V >= 2");
  }
  if (alphabet_ && alphabet_->size() != logp_.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "emission alphabet size does not match symbol table");
  }
  for (Eigen::Index t = 0; t < logp_.rows(); ++t) {
    for (Eigen::Index v = 0; v < logp_.cols(); ++v) {
      const double x = logp_(t, v);
      if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "emission row " + std::to_string(t) + " has NaN or +inf");
      }
    }
    const double mass = logsumexp(logp_.row(t));
    if (!(std::abs(mass) < kRowTolerance)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "emission row " + std::to_string(t) +
                      " is not normalized (log mass " + std::to_string(mass) +
                      ")");
    }
  }
}

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd &logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double norm = logsumexp(logits.row(t));
    out.row(t) = logits.row(t).array() - norm;
  }
  return out;
}

Emissions Emissions::from_logits(const Eigen::MatrixXd &logits,
                                 std::shared_ptr<const SymbolTable> alphabet) {
  return Emissions(log_softmax_rows(logits), std::move(alphabet));
}

Emissions Emissions::head(int num_frames) const {
  return Emissions(logp_.topRows(num_frames), alphabet_);
}

}  // namespace lfmmi
