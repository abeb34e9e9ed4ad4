#include "doctest.h"

#include "lfmmi/error.hpp"
#include "lfmmi/scorers.hpp"
#include "oracle.hpp"

using namespace lfmmi;

TEST_CASE("CTC prefix probabilities match enumeration") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const oracle::Toy toy = oracle::make_toy(seed, {3, 3, 2, 4});
    const CtcPrefixScorer ctc(*toy.emissions);
    const int V = toy.emissions->alphabet_size();
    for (int len = 0; len <= 2; ++len) {
      oracle::for_each_string(len, 2, V - 1, [&](const auto &g) {
        const double psi = oracle::ctc_prefix_prob(*toy.emissions, g);
        const double p = oracle::ctc_full_prob(*toy.emissions, g);
        if (is_log_zero(psi)) {
          CHECK(is_log_zero(ctc.prefix_log_prob(g)));
        } else {
          CHECK(ctc.prefix_log_prob(g) == doctest::Approx(psi).epsilon(1e-10));
        }
        if (!is_log_zero(p)) {
          CHECK(ctc.full_log_prob(g) == doctest::Approx(p).epsilon(1e-10));
        }
      });
    }
  }
}

TEST_CASE("CTC prefix scores form a distribution") {
  const oracle::Toy toy = oracle::make_toy(3, {4, 3, 4, 6});
  const CtcPrefixScorer ctc(*toy.emissions);
  for (const std::vector<LabelId> &g :
       std::vector<std::vector<LabelId>>{{}, {2}, {2, 3}, {3, 3}}) {
    const Eigen::VectorXd d = ctc.score_next(g);
    CHECK(is_log_zero(d(kBlank)));
    CHECK(std::abs(logsumexp(d)) < 1e-9);
  }
}

TEST_CASE("peaked emissions favour the emitted token") {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(3, 3, -20.0);
  logits.col(0).setConstant(kLogZero<double>);
  logits(0, 2) = logits(1, 2) = 0.0;
  logits(2, 1) = 0.0;
  const CtcPrefixScorer ctc(Emissions::from_logits(logits));
  const Eigen::VectorXd first = ctc.score_next({});
  CHECK(first(2) > -1e-6);
  const std::vector<LabelId> g{2};
  CHECK(ctc.score_next(g)(kEndOfSentence) > -1e-6);
}

TEST_CASE("token bigram counts") {
  // Vocabulary: 0 = </s>, 1 = blank, 2..3 tokens.
  const std::vector<std::vector<LabelId>> train{{2, 3}, {2}, {3, 3}};
  const NgramTokenLm lm(train, 4, 2, 1.0);
  const Eigen::VectorXd start = lm.score_next({});
  // <s>: 2 twice, 3 once; 3 outcomes with add-1.
  CHECK(start(2) == doctest::Approx(std::log(3.0 / 6.0)));
  CHECK(start(3) == doctest::Approx(std::log(2.0 / 6.0)));
  CHECK(start(0) == doctest::Approx(std::log(1.0 / 6.0)));
  CHECK(is_log_zero(start(kBlank)));
  const std::vector<LabelId> after3{3};
  const Eigen::VectorXd d = lm.score_next(after3);
  // 3 -> 3 once, 3 -> </s> twice.
  CHECK(d(0) == doctest::Approx(std::log(3.0 / 6.0)));
  CHECK(d(3) == doctest::Approx(std::log(2.0 / 6.0)));
  CHECK(std::abs(logsumexp(d)) < 1e-12);

  const NgramTokenLm empty(std::vector<std::vector<LabelId>>{}, 5);
  const Eigen::VectorXd u = empty.score_next({});
  CHECK(u(0) == doctest::Approx(std::log(0.25)));
  CHECK(u(4) == doctest::Approx(std::log(0.25)));

  const std::vector<std::vector<LabelId>> same(5, std::vector<LabelId>{2});
  const NgramTokenLm det(same, 3, 2, 1e-9);
  CHECK(det.score_next({})(2) > -1e-6);
}

TEST_CASE("joint table rows clamp at the last position") {
  Eigen::MatrixXd rows(2 * 2, 3);
  for (int r = 0; r < 4; ++r) {
    rows.row(r) << kLogZero<double>, std::log(0.25 * (r + 1) / 2.5), 0.0;
    rows(r, 2) = std::log(1.0 - std::exp(rows(r, 1)));
  }
  const TableJointScorer joint(2, 2, rows);
  const std::vector<LabelId> u2{2, 2};
  CHECK(joint.score_joint(1, u2)(1) == rows(3, 1));
  CHECK(joint.score_joint(0, {})(1) == rows(0, 1));
  CHECK_THROWS_AS(TableJointScorer(3, 2, rows), Error);
}
