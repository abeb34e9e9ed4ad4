#pragma once

#include <span>
#include <string>
#include <vector>

#include "lfmmi/fsa.hpp"
#include "lfmmi/lexicon.hpp"
#include "lfmmi/phone_lm.hpp"

namespace lfmmi {

struct TopologyConfig {
  LabelId blank = kBlank;
  bool allow_repeat_collapse = true;

  /// Throws Error(kInvalidArgument) unless blank is 1 and repeat collapse is
  /// on; those are the only topologies the compilers build.
  void validate() const;
};

/// A partial hypothesis split into complete words and a dangling spelling
/// prefix, together with every lexicon word the prefix may still become.
struct PrefixSplit {
  std::vector<std::string> context;
  std::string prefix;
  /// The prefix is known to be a finished word: expansion is {prefix}.
  bool complete = false;
  std::vector<std::string> expansion;
};

/// Throws Error(kDeadPrefix) when no lexicon word starts with `prefix`, and
/// Error(kOov) when a complete prefix or a context word is not a word.
PrefixSplit make_prefix_split(std::vector<std::string> context,
                              std::string prefix, bool complete,
                              const Lexicon &lexicon);

/// CTC alignment acceptor for a phone string. States are laid out as
/// blank_0, phone_1, blank_1, ..., phone_n, blank_n, so the graph of a phone
/// string is a state prefix of the graph of any extension of it, and arcs
/// into its states are the same in both.
Fsa compile_phone_numerator(std::span<const LabelId> phones, int label_space,
                            const TopologyConfig &topo = {});

/// Unweighted CTC alignment acceptor of the lexicon expansion of `words`.
Fsa compile_numerator(std::span<const std::string> words,
                      const Lexicon &lexicon, const TopologyConfig &topo = {});

/// Context words as a chain, then one parallel tail per expansion word, with
/// the CTC topology applied across the whole phone graph.
Fsa compile_prefix_numerator(const PrefixSplit &split, const Lexicon &lexicon,
                             const TopologyConfig &topo = {});

/// Phone-loop acceptor with bigram weights on phone-entry arcs and CTC
/// topology; blank arcs are free. Finals carry the </s> probability.
Fsa compile_denominator(const PhoneBigramLm &lm,
                        const TopologyConfig &topo = {});

/// Fewest frames a CTC alignment of `phones` can use.
int min_alignment_length(std::span<const LabelId> phones);

}  // namespace lfmmi
