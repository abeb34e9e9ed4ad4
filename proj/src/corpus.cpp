#include "lfmmi/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "lfmmi/error.hpp"

namespace lfmmi {
namespace {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

int uniform_int(Rng &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double distinct_pronunciations(const CorpusSpec &spec) {
  double total = 0.0;
  for (int len = spec.min_phones_per_word; len <= spec.max_phones_per_word;
       ++len) {
    total += std::pow(static_cast<double>(spec.num_phones), len);
  }
  return total;
}

std::string spell(const std::vector<LabelId> &phones) {
  std::string word;
  for (LabelId p : phones) word += static_cast<char>('a' + (p - 2));
  return word;
}

// Appends `count` random phones.
void append_phones(std::vector<LabelId> &phones, int count, int num_phones,
                   Rng &rng) {
  for (int i = 0; i < count; ++i) {
    phones.push_back(static_cast<LabelId>(2 + uniform_int(rng, 0, num_phones - 1)));
  }
}

// One noisy log-posterior row peaked at `target`; column 0 is never used.
void noisy_row(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, LabelId target, double tau,
               Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::max(tau, 0.01);
  row(0) = kLogZero<double>;
  for (Eigen::Index v = 1; v < row.size(); ++v) {
    row(v) = (v == target ? scale : 0.0) + tau * normal(rng);
  }
  const double norm = logsumexp(row.tail(row.size() - 1));
  row.tail(row.size() - 1).array() -= norm;
}

}  // namespace

void CorpusSpec::validate() const {
  auto require = [](bool ok, const char *what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(num_phones >= 1 && num_phones <= 26, "num_phones must be in [1, 26]");
  require(num_words >= 1, "num_words must be positive");
  require(min_phones_per_word >= 1 &&
              min_phones_per_word <= max_phones_per_word,
          "bad phones-per-word range");
  require(min_words_per_utterance >= 1 &&
              min_words_per_utterance <= max_words_per_utterance,
          "bad words-per-utterance range");
  require(num_utterances >= 0 && num_train >= 0,
          "utterance counts must be non-negative");
  require(std::isfinite(tau) && tau >= 0.0, "tau must be >= 0");
  require(overlap >= 0 && overlap <= max_phones_per_word,
          "overlap must be in [0, max_phones_per_word]");
  require(mean_phone_duration >= 1.0, "mean phone duration must be >= 1");
  require(distinct_pronunciations(*this) >= num_words,
          "more words requested than distinct spellings exist");
}

std::uint64_t utterance_seed(std::uint64_t corpus_seed, std::uint64_t index) {
  Rng rng = make_rng(corpus_seed, 0x9e3779b97f4a7c15ULL ^ index);
  return rng();
}

GeneratedCorpus generate_corpus(const CorpusSpec &spec) {
  spec.validate();
  auto phones = std::make_shared<SymbolTable>();
  for (int i = 0; i < spec.num_phones; ++i) {
    phones->add(std::string(1, static_cast<char>('a' + i)));
  }
  GeneratedCorpus corpus{Lexicon(phones), {}, {}};
  Rng rng = make_rng(spec.seed, 1);

  std::set<std::vector<LabelId>> seen;
  std::vector<std::vector<LabelId>> prons;
  // Rejection sampling; the cap only matters for nearly exhausted spaces.
  const long max_attempts = 1000L * spec.num_words + 100000L;
  long attempts = 0;
  while (static_cast<int>(prons.size()) < spec.num_words) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::kInvalidArgument,
                  "could not sample enough distinct words");
    }
    const std::size_t index = prons.size();
    std::vector<LabelId> pron;
    int len = uniform_int(rng, spec.min_phones_per_word,
                          spec.max_phones_per_word);
    if (index % 2 == 1 && spec.overlap > 0) {
      const std::vector<LabelId> &partner = prons[index - 1];
      if (index == 1 && static_cast<int>(partner.size()) <
                            spec.max_phones_per_word) {
        // Strict prefix pair: the partner's full spelling plus a suffix.
        len = uniform_int(rng, static_cast<int>(partner.size()) + 1,
                          spec.max_phones_per_word);
        pron = partner;
      } else {
        const int shared = std::min({spec.overlap, len,
                                     static_cast<int>(partner.size())});
        pron.assign(partner.begin(), partner.begin() + shared);
      }
    }
    append_phones(pron, len - static_cast<int>(pron.size()), spec.num_phones,
                  rng);
    if (seen.insert(pron).second) prons.push_back(std::move(pron));
  }
  for (auto &pron : prons) corpus.lexicon.add(spell(pron), pron);

  const std::vector<std::string> words = corpus.lexicon.words();
  auto sample_transcript = [&]() {
    std::vector<std::string> transcript(uniform_int(
        rng, spec.min_words_per_utterance, spec.max_words_per_utterance));
    for (auto &w : transcript) {
      w = words[uniform_int(rng, 0, static_cast<int>(words.size()) - 1)];
    }
    return transcript;
  };
  for (int i = 0; i < spec.num_train; ++i) {
    corpus.train.push_back(sample_transcript());
  }
  for (int i = 0; i < spec.num_utterances; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "utt%04d", i);
    corpus.test.push_back({id, sample_transcript()});
  }
  return corpus;
}

AlignedUtterance synthesize_emissions(std::span<const std::string> words,
                                      const Lexicon &lexicon,
                                      const TokenInventory &tokens,
                                      double tau, std::uint64_t seed,
                                      double mean_phone_duration) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be >= 0");
  }
  if (mean_phone_duration < 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "mean duration must be >= 1");
  }
  Rng rng = make_rng(seed, 2);
  std::geometric_distribution<int> extra_duration(1.0 / mean_phone_duration);
  std::geometric_distribution<int> blank_run(0.5);

  std::vector<LabelId> phone_align;
  std::vector<LabelId> token_align;
  std::vector<int> emission_frames;
  auto push = [&](LabelId phone, LabelId token, int count) {
    phone_align.insert(phone_align.end(), count, phone);
    token_align.insert(token_align.end(), count, token);
  };

  push(kBlank, kBlank, blank_run(rng));
  LabelId previous_phone = kBlank;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::vector<LabelId> &pron = lexicon.pronunciation(words[w]);
    if (w > 0) {
      const bool needs_gap = tokens.lookahead || words[w] == words[w - 1] ||
                             pron.front() == previous_phone;
      int gap = blank_run(rng);
      if (needs_gap) gap = std::max(gap, 1);
      if (tokens.lookahead) {
        // The separator occupies the first frame of the gap.
        push(kBlank, tokens.separator, 1);
        emission_frames.push_back(static_cast<int>(phone_align.size()) - 1);
        --gap;
      }
      push(kBlank, kBlank, gap);
    }
    const LabelId word_token =
        tokens.lookahead ? kBlank : tokens.symbols->id(words[w]);
    for (std::size_t i = 0; i < pron.size(); ++i) {
      const LabelId token =
          tokens.lookahead ? tokens.symbols->id(std::string(1, words[w][i]))
                           : word_token;
      if (i > 0 && pron[i] == pron[i - 1]) {
        // Repeated phones need a blank between them; inside a word it keeps
        // the word token so the token sequence does not split.
        push(kBlank, tokens.lookahead ? kBlank : word_token, 1);
      }
      push(pron[i], token, 1 + extra_duration(rng));
      if (tokens.lookahead) {
        emission_frames.push_back(static_cast<int>(phone_align.size()) - 1);
      }
    }
    if (!tokens.lookahead) {
      emission_frames.push_back(static_cast<int>(phone_align.size()) - 1);
    }
    previous_phone = pron.back();
  }
  push(kBlank, kBlank, blank_run(rng));
  if (phone_align.empty()) push(kBlank, kBlank, 1);

  const int num_frames = static_cast<int>(phone_align.size());
  const int num_phone_labels = lexicon.phones().size();
  const int num_token_labels = tokens.symbols->size();

  Eigen::MatrixXd phone_logp(num_frames, num_phone_labels);
  for (int t = 0; t < num_frames; ++t) {
    noisy_row(phone_logp.row(t), phone_align[t], tau, rng);
  }
  Eigen::MatrixXd token_logp(num_frames, num_token_labels);
  for (int t = 0; t < num_frames; ++t) {
    noisy_row(token_logp.row(t), token_align[t], tau, rng);
  }

  const std::vector<LabelId> token_ids = tokens.tokens_of_words(words);
  const int positions = static_cast<int>(token_ids.size()) + 1;
  Eigen::MatrixXd joint(static_cast<Eigen::Index>(num_frames) * positions,
                        num_token_labels);
  int emitted = 0;  // tokens whose emission frame is <= t
  for (int t = 0; t < num_frames; ++t) {
    while (emitted < static_cast<int>(emission_frames.size()) &&
           emission_frames[emitted] <= t) {
      ++emitted;
    }
    for (int u = 0; u < positions; ++u) {
      const LabelId target = u < emitted ? token_ids[u] : kBlank;
      noisy_row(joint.row(static_cast<Eigen::Index>(t) * positions + u),
                target, tau, rng);
    }
  }

  return {std::vector<std::string>(words.begin(), words.end()),
          token_ids,
          std::move(phone_align),
          std::move(token_align),
          std::move(emission_frames),
          Emissions(std::move(phone_logp), lexicon.phone_table()),
          Emissions(std::move(token_logp), tokens.symbols),
          std::move(joint)};
}

double ErrorRate::rate() const {
  if (ref_tokens == 0) return errors() == 0 ? 0.0 : 1.0;
  return static_cast<double>(errors()) / static_cast<double>(ref_tokens);
}

ErrorRate &ErrorRate::operator+=(const ErrorRate &other) {
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  ref_tokens += other.ref_tokens;
  return *this;
}

ErrorRate edit_errors(std::span<const std::string> hyp,
                      std::span<const std::string> ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  // d(i, j): distance between ref[0, i) and hyp[0, j).
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  ErrorRate out;
  out.ref_tokens = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  return out;
}

ErrorRate evaluate_error_rate(
    std::span<const std::vector<std::string>> hyps,
    std::span<const std::vector<std::string>> refs) {
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "hypothesis and reference counts differ");
  }
  ErrorRate total;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    total += edit_errors(hyps[k], refs[k]);
  }
  return total;
}

}  // namespace lfmmi
