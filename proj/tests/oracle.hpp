#pragma once

// Brute-force reference computations. Everything here enumerates label
// strings or paths explicitly and shares no dynamic programming with the
// library, so agreement is evidence that the recursions are right.

#include <Eigen/Core>

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lfmmi/emissions.hpp"
#include "lfmmi/fsa.hpp"
#include "lfmmi/lexicon.hpp"
#include "lfmmi/log_weight.hpp"
#include "lfmmi/phone_lm.hpp"

namespace oracle {

using lfmmi::LabelId;
constexpr double kZero = lfmmi::kLogZero<double>;

inline double lse(double a, double b) { return lfmmi::log_add(a, b); }

/// Calls fn(s) for every string of `length` labels drawn from [lo, hi].
inline void for_each_string(int length, LabelId lo, LabelId hi,
                            const std::function<void(const std::vector<LabelId> &)> &fn) {
  std::vector<LabelId> s(length, lo);
  while (true) {
    fn(s);
    int i = length - 1;
    while (i >= 0 && s[i] == hi) s[i--] = lo;
    if (i < 0) return;
    ++s[i];
  }
}

/// Merge repeats, then drop blanks.
inline std::vector<LabelId> ctc_collapse(const std::vector<LabelId> &s,
                                         LabelId blank = lfmmi::kBlank) {
  std::vector<LabelId> out;
  LabelId prev = -1;
  for (LabelId x : s) {
    if (x != prev && x != blank) out.push_back(x);
    prev = x;
  }
  return out;
}

inline double string_log_prob(const lfmmi::Emissions &e,
                              const std::vector<LabelId> &s) {
  double lp = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) lp += e(static_cast<int>(t), s[t]);
  return lp;
}

/// Sum over label strings of length t (frames [0, t)) whose collapse equals
/// `target`.
inline double ctc_numerator(const lfmmi::Emissions &e,
                            const std::vector<LabelId> &target, int t) {
  double total = kZero;
  for_each_string(t, 1, e.alphabet_size() - 1, [&](const auto &s) {
    if (ctc_collapse(s) == target) total = lse(total, string_log_prob(e, s));
  });
  if (t == 0 && target.empty()) return 0.0;
  return total;
}

/// Same, for any of several targets (their string sets are disjoint).
inline double ctc_numerator_any(const lfmmi::Emissions &e,
                                const std::vector<std::vector<LabelId>> &targets,
                                int t) {
  double total = kZero;
  for (const auto &target : targets) total = lse(total, ctc_numerator(e, target, t));
  return total;
}

/// Bigram probability of a phone sequence including <s> and </s>.
inline double bigram_log_prob(const lfmmi::PhoneBigramLm &lm,
                              const std::vector<LabelId> &phones) {
  LabelId prev = lfmmi::PhoneBigramLm::kBoundary;
  double lp = 0.0;
  for (LabelId p : phones) {
    lp += lm.logp(prev, p);
    prev = p;
  }
  return lp + lm.logp(prev, lfmmi::PhoneBigramLm::kBoundary);
}

/// Sum over every label string of length t, weighted by the bigram
/// probability of its collapse.
inline double ctc_denominator(const lfmmi::Emissions &e,
                              const lfmmi::PhoneBigramLm &lm, int t) {
  if (t == 0) return bigram_log_prob(lm, {});
  double total = kZero;
  for_each_string(t, 1, e.alphabet_size() - 1, [&](const auto &s) {
    total = lse(total, string_log_prob(e, s) + bigram_log_prob(lm, ctc_collapse(s)));
  });
  return total;
}

/// log sum_t exp(num_t - den_t) over t = 1..T, skipping zero terms.
inline double prefix_score(const lfmmi::Emissions &e, const lfmmi::PhoneBigramLm &lm,
                           const std::vector<std::vector<LabelId>> &targets) {
  double total = kZero;
  for (int t = 1; t <= e.num_frames(); ++t) {
    const double num = ctc_numerator_any(e, targets, t);
    const double den = ctc_denominator(e, lm, t);
    if (num != kZero && den != kZero) total = lse(total, num - den);
  }
  return total;
}

/// Weight of `s` in an arbitrary acceptor: sum over every path reading it.
/// Epsilon arcs must be acyclic.
inline double fsa_string_weight(const lfmmi::Fsa &fsa,
                                const std::vector<LabelId> &s) {
  std::function<double(lfmmi::StateId, std::size_t)> walk =
      [&](lfmmi::StateId q, std::size_t pos) {
        double total = kZero;
        if (pos == s.size() && fsa.is_final(q)) total = fsa.final_weight(q).value();
        for (const lfmmi::Arc &arc : fsa.arcs()) {
          if (arc.src != q || arc.weight.is_zero()) continue;
          if (arc.label == lfmmi::kEpsilon) {
            total = lse(total, arc.weight.value() + walk(arc.dst, pos));
          } else if (pos < s.size() && arc.label == s[pos]) {
            total = lse(total, arc.weight.value() + walk(arc.dst, pos + 1));
          }
        }
        return total;
      };
  return walk(fsa.start(), 0);
}

/// log P(first t frames | graph) by explicit string enumeration.
inline double fsa_frame_score(const lfmmi::Fsa &fsa, const lfmmi::Emissions &e,
                              int t) {
  double total = kZero;
  if (t == 0) return fsa_string_weight(fsa, {});
  for_each_string(t, 1, e.alphabet_size() - 1, [&](const auto &s) {
    const double w = fsa_string_weight(fsa, s);
    if (w != kZero) total = lse(total, w + string_log_prob(e, s));
  });
  return total;
}

/// CTC prefix probability: labelings of all T frames that start with g.
inline double ctc_prefix_prob(const lfmmi::Emissions &e,
                              const std::vector<LabelId> &g) {
  if (g.empty()) return 0.0;
  double total = kZero;
  for_each_string(e.num_frames(), 1, e.alphabet_size() - 1, [&](const auto &s) {
    const auto c = ctc_collapse(s);
    if (c.size() >= g.size() && std::equal(g.begin(), g.end(), c.begin())) {
      total = lse(total, string_log_prob(e, s));
    }
  });
  return total;
}

inline double ctc_full_prob(const lfmmi::Emissions &e,
                            const std::vector<LabelId> &g) {
  return ctc_numerator(e, g, e.num_frames());
}

/// Random toy problem: phones a.., a lexicon with distinct pronunciations,
/// random emissions and a phone bigram estimated from random transcripts.
struct Toy {
  std::shared_ptr<lfmmi::SymbolTable> phones;
  std::shared_ptr<lfmmi::Lexicon> lexicon;
  std::vector<std::vector<std::string>> train;
  std::shared_ptr<lfmmi::PhoneBigramLm> lm;
  Eigen::MatrixXd logits;
  std::shared_ptr<lfmmi::Emissions> emissions;
};

struct ToyShape {
  int max_phones = 4;
  int max_words = 5;
  int min_frames = 2;
  int max_frames = 6;
  int max_pron = 2;
  /// Word names spell their phones, so prefixes are shared spelling prefixes.
  bool spelled = true;
};

inline Toy make_toy(std::uint64_t seed, const ToyShape &shape = {}) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  Toy toy;
  const int num_phones = uniform(2, shape.max_phones);
  toy.phones = std::make_shared<lfmmi::SymbolTable>();
  for (int i = 0; i < num_phones; ++i) toy.phones->add(std::string(1, char('a' + i)));
  toy.lexicon = std::make_shared<lfmmi::Lexicon>(toy.phones);
  const int num_words = uniform(2, shape.max_words);
  int attempts = 0;
  while (toy.lexicon->size() < num_words && ++attempts < 1000) {
    std::vector<LabelId> pron(uniform(1, shape.max_pron));
    std::string name;
    for (auto &p : pron) {
      p = uniform(2, num_phones + 1);
      name += toy.phones->symbol(p);
    }
    if (!shape.spelled) name = "w" + std::to_string(toy.lexicon->size());
    bool duplicate = toy.lexicon->contains(name);
    for (const auto &w : toy.lexicon->words()) {
      if (toy.lexicon->pronunciation(w) == pron) duplicate = true;
    }
    if (!duplicate) toy.lexicon->add(name, pron);
  }
  const auto words = toy.lexicon->words();
  toy.train.resize(5);
  for (auto &t : toy.train) {
    t.resize(uniform(1, 3));
    for (auto &w : t) w = words[uniform(0, static_cast<int>(words.size()) - 1)];
  }
  toy.lm = std::make_shared<lfmmi::PhoneBigramLm>(
      lfmmi::estimate_phone_bigram(toy.train, *toy.lexicon, 0.5));
  const int frames = uniform(shape.min_frames, shape.max_frames);
  std::normal_distribution<double> normal(0.0, 1.5);
  toy.logits.resize(frames, num_phones + 2);
  for (int t = 0; t < frames; ++t) {
    toy.logits(t, 0) = kZero;
    for (int v = 1; v < num_phones + 2; ++v) toy.logits(t, v) = normal(rng);
  }
  toy.emissions = std::make_shared<lfmmi::Emissions>(
      lfmmi::Emissions::from_logits(toy.logits, toy.phones));
  return toy;
}

/// Random transcript whose phones fit in `frames` frames.
inline std::vector<std::string> random_transcript(const Toy &toy, std::uint64_t seed,
                                                  int max_words, int frames) {
  std::mt19937_64 rng(seed);
  const auto words = toy.lexicon->words();
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::string> t(std::uniform_int_distribution<int>(1, max_words)(rng));
    for (auto &w : t) {
      w = words[std::uniform_int_distribution<int>(0, static_cast<int>(words.size()) - 1)(rng)];
    }
    const auto phones = lfmmi::expand_to_phones(t, *toy.lexicon);
    int need = static_cast<int>(phones.size());
    for (std::size_t i = 1; i < phones.size(); ++i) need += phones[i] == phones[i - 1];
    if (need <= frames) return t;
  }
  return {words.front()};
}

}  // namespace oracle
