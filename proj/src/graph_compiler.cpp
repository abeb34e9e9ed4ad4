#include "lfmmi/graph_compiler.hpp"

#include "lfmmi/error.hpp"

namespace lfmmi {
namespace {

struct PhoneArc {
  int src_node;
  int dst_node;
  LabelId phone;
};

// Applies the CTC topology to a phone DAG. Each node gets a blank state with
// a blank self-loop, each phone arc a phone state with a self-loop. Moving
// between two phone states directly is allowed only for distinct phones.
Fsa ctc_from_phone_dag(int num_nodes, std::span<const PhoneArc> dag,
                       std::span<const int> final_nodes, int label_space,
                       const TopologyConfig &topo) {
  topo.validate();
  Fsa fsa(1);
  fsa.set_label_space(label_space);
  std::vector<StateId> blank_state(num_nodes, -1);
  blank_state[0] = 0;
  std::vector<StateId> phone_state(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) {
    phone_state[i] = fsa.add_state();
    if (blank_state[dag[i].dst_node] < 0) {
      blank_state[dag[i].dst_node] = fsa.add_state();
    }
  }
  for (int node = 0; node < num_nodes; ++node) {
    if (blank_state[node] >= 0) {
      fsa.add_arc(blank_state[node], blank_state[node], topo.blank);
    }
  }
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const PhoneArc &arc = dag[i];
    const StateId p = phone_state[i];
    fsa.add_arc(blank_state[arc.src_node], p, arc.phone);
    fsa.add_arc(p, p, arc.phone);
    fsa.add_arc(p, blank_state[arc.dst_node], topo.blank);
    for (std::size_t j = 0; j < dag.size(); ++j) {
      if (dag[j].src_node == arc.dst_node && dag[j].phone != arc.phone) {
        fsa.add_arc(p, phone_state[j], dag[j].phone);
      }
    }
  }
  for (int node : final_nodes) {
    fsa.set_final(blank_state[node]);
    for (std::size_t i = 0; i < dag.size(); ++i) {
      if (dag[i].dst_node == node) fsa.set_final(phone_state[i]);
    }
  }
  return fsa;
}

// Appends `phones` as a chain starting at `node`; returns the end node.
int append_chain(std::vector<PhoneArc> &dag, int &num_nodes, int node,
                 std::span<const LabelId> phones) {
  for (LabelId phone : phones) {
    const int next = num_nodes++;
    dag.push_back({node, next, phone});
    node = next;
  }
  return node;
}

}  // namespace

void TopologyConfig::validate() const {
  if (blank != kBlank) {
    throw Error(ErrorCode::kInvalidArgument, "blank must be label 1");
  }
  if (!allow_repeat_collapse) {
    throw Error(ErrorCode::kInvalidArgument,
                "only the repeat-collapsing CTC topology is supported");
  }
}

PrefixSplit make_prefix_split(std::vector<std::string> context,
                              std::string prefix, bool complete,
                              const Lexicon &lexicon) {
  for (const std::string &word : context) lexicon.pronunciation(word);
  PrefixSplit split{std::move(context), std::move(prefix), complete, {}};
  if (complete) {
    lexicon.pronunciation(split.prefix);
    split.expansion = {split.prefix};
  } else {
    split.expansion = lexicon.words_with_prefix(split.prefix);
    if (split.expansion.empty()) {
      throw Error(ErrorCode::kDeadPrefix,
                  "dead prefix: no lexicon word starts with '" + split.prefix +
                      "'");
    }
  }
  return split;
}

Fsa compile_phone_numerator(std::span<const LabelId> phones, int label_space,
                            const TopologyConfig &topo) {
  std::vector<PhoneArc> dag;
  int num_nodes = 1;
  const int end = append_chain(dag, num_nodes, 0, phones);
  const int finals[] = {end};
  return ctc_from_phone_dag(num_nodes, dag, finals, label_space, topo);
}

Fsa compile_numerator(std::span<const std::string> words,
                      const Lexicon &lexicon, const TopologyConfig &topo) {
  const std::vector<LabelId> phones = expand_to_phones(words, lexicon);
  return compile_phone_numerator(phones, lexicon.phones().size(), topo);
}

Fsa compile_prefix_numerator(const PrefixSplit &split, const Lexicon &lexicon,
                             const TopologyConfig &topo) {
  if (split.expansion.empty()) {
    throw Error(ErrorCode::kDeadPrefix,
                "dead prefix: empty expansion for '" + split.prefix + "'");
  }
  std::vector<PhoneArc> dag;
  int num_nodes = 1;
  const int branch_point = append_chain(
      dag, num_nodes, 0, expand_to_phones(split.context, lexicon));
  std::vector<int> finals;
  for (const std::string &word : split.expansion) {
    finals.push_back(append_chain(dag, num_nodes, branch_point,
                                  lexicon.pronunciation(word)));
  }
  return ctc_from_phone_dag(num_nodes, dag, finals, lexicon.phones().size(),
                            topo);
}

Fsa compile_denominator(const PhoneBigramLm &lm, const TopologyConfig &topo) {
  topo.validate();
  const std::vector<LabelId> phones = lm.phone_ids();
  const int n = lm.num_phones();
  // State 0 is the blank state of <s>; phone i owns states 2i+1 (phone) and
  // 2i+2 (blank after it).
  Fsa fsa(2 * n + 1);
  fsa.set_label_space(n + 2);
  auto phone_state = [](int i) { return 2 * i + 1; };
  auto blank_state = [](int i) { return 2 * i + 2; };
  auto add = [&fsa](StateId src, StateId dst, LabelId label, double w) {
    if (!is_log_zero(w)) fsa.add_arc(src, dst, label, LogWeight(w));
  };

  add(0, 0, topo.blank, 0.0);
  for (int j = 0; j < n; ++j) {
    add(0, phone_state(j), phones[j],
        lm.logp(PhoneBigramLm::kBoundary, phones[j]));
  }
  fsa.set_final(0, LogWeight(lm.logp(PhoneBigramLm::kBoundary,
                                     PhoneBigramLm::kBoundary)));
  for (int i = 0; i < n; ++i) {
    const LabelId p = phones[i];
    add(phone_state(i), phone_state(i), p, 0.0);
    add(phone_state(i), blank_state(i), topo.blank, 0.0);
    add(blank_state(i), blank_state(i), topo.blank, 0.0);
    for (int j = 0; j < n; ++j) {
      const double w = lm.logp(p, phones[j]);
      add(blank_state(i), phone_state(j), phones[j], w);
      if (j != i) add(phone_state(i), phone_state(j), phones[j], w);
    }
    const LogWeight end(lm.logp(p, PhoneBigramLm::kBoundary));
    fsa.set_final(phone_state(i), end);
    fsa.set_final(blank_state(i), end);
  }
  return fsa;
}

int min_alignment_length(std::span<const LabelId> phones) {
  int frames = static_cast<int>(phones.size());
  for (std::size_t i = 1; i < phones.size(); ++i) {
    if (phones[i] == phones[i - 1]) ++frames;
  }
  return frames;
}

}  // namespace lfmmi
