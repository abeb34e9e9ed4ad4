#include "doctest.h"

#include <random>

#include "lfmmi/error.hpp"
#include "lfmmi/fsa.hpp"
#include "lfmmi/fsa_algo.hpp"
#include "oracle.hpp"

using namespace lfmmi;

namespace {

// Random acceptor over labels 1..3 whose epsilon arcs only go forward, so
// epsilon cycles cannot occur.
Fsa random_acceptor(std::mt19937_64 &rng, int states, int arcs) {
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> weight(-2.0, 0.0);
  Fsa fsa(states);
  for (int i = 0; i < arcs; ++i) {
    const StateId src = uniform(0, states - 1);
    const LabelId label = uniform(0, 3);
    StateId dst = uniform(0, states - 1);
    if (label == kEpsilon && dst <= src) {
      if (src == states - 1) continue;
      dst = uniform(src + 1, states - 1);
    }
    fsa.add_arc(src, dst, label, LogWeight(weight(rng)));
  }
  fsa.set_final(states - 1, LogWeight(weight(rng)));
  if (uniform(0, 1)) fsa.set_final(uniform(0, states - 1), LogWeight(weight(rng)));
  return fsa;
}

}  // namespace

TEST_CASE("compose multiplies string weights") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const Fsa a = random_acceptor(rng, 4, 9);
    const Fsa b = random_acceptor(rng, 3, 7);
    const Fsa c = compose(a, b);
    for (int len = 0; len <= 3; ++len) {
      oracle::for_each_string(len, 1, 3, [&](const auto &s) {
        const double wa = oracle::fsa_string_weight(a, s);
        const double wb = oracle::fsa_string_weight(b, s);
        const double wc = oracle::fsa_string_weight(c, s);
        if (is_log_zero(wa) || is_log_zero(wb)) {
          CHECK(is_log_zero(wc));
        } else {
          CHECK(wc == doctest::Approx(wa + wb).epsilon(1e-12));
        }
      });
    }
  }
}

TEST_CASE("compose drops epsilon self-loops") {
  Fsa a(2);
  a.add_arc(0, 0, kEpsilon, LogWeight(-1.0));
  a.add_arc(0, 1, 2);
  a.set_final(1);
  Fsa b(2);
  b.add_arc(0, 1, 2, LogWeight(-0.5));
  b.set_final(1);
  const Fsa c = compose(a, b);
  CHECK(c.num_states() == 2);
  CHECK(c.num_arcs() == 1);
  CHECK(oracle::fsa_string_weight(c, {2}) == doctest::Approx(-0.5));
}

TEST_CASE("compose rejects different label spaces") {
  Fsa a, b;
  a.set_label_space(4);
  b.set_label_space(5);
  try {
    compose(a, b);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kLabelSpace);
  }
  b.set_label_space(std::nullopt);
  CHECK_NOTHROW(compose(a, b));
}

TEST_CASE("connect trims useless states and keeps the start") {
  Fsa a(5);
  a.add_arc(0, 1, 2);
  a.add_arc(1, 2, 3);
  a.add_arc(0, 3, 2);         // 3 is a dead end
  a.add_arc(4, 2, 2);         // 4 is unreachable
  a.add_arc(0, 2, 4, LogWeight::Zero());
  a.set_final(2);
  const Fsa c = connect(a);
  CHECK(c.num_states() == 3);
  CHECK(c.num_arcs() == 2);
  CHECK(c.is_final(2));
  CHECK(oracle::fsa_string_weight(c, {2, 3}) == 0.0);

  Fsa empty(2);
  empty.add_arc(0, 1, 2);
  const Fsa e = connect(empty);
  CHECK(e.num_states() == 1);
  CHECK(e.num_arcs() == 0);
  CHECK_FALSE(e.is_final(0));
}

TEST_CASE("epsilon arcs in topological order") {
  Fsa a(4);
  a.add_arc(2, 3, kEpsilon);
  a.add_arc(0, 1, kEpsilon);
  a.add_arc(1, 2, kEpsilon);
  a.add_arc(0, 2, 5);
  const auto order = epsilon_arcs_topological(a);
  REQUIRE(order.size() == 3);
  CHECK(order[0].src == 0);
  CHECK(order[1].src == 1);
  CHECK(order[2].src == 2);

  a.add_arc(3, 1, kEpsilon);
  try {
    epsilon_arcs_topological(a);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kInvalidGraph);
  }
}

TEST_CASE("fsa validation and arc lookup") {
  Fsa a(3);
  a.add_arc(1, 2, 3);
  a.add_arc(0, 1, 2);
  a.add_arc(0, 2, 1);
  a.sort_arcs();
  CHECK(a.arcs_from(0).size() == 2);
  CHECK(a.arcs_from(0)[0].label == 1);
  CHECK(a.arcs_from(2).empty());
  CHECK(a.max_label() == 3);
  CHECK(same_structure(a, a));
  a.set_label_space(3);
  CHECK_THROWS_AS(a.validate(), Error);
  a.set_label_space(4);
  a.add_arc(0, 7, 2);
  CHECK_THROWS_AS(a.validate(), Error);
}
