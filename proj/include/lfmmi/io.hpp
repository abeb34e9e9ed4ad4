#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfmmi/corpus.hpp"
#include "lfmmi/decoder.hpp"
#include "lfmmi/fsa.hpp"
#include "lfmmi/phone_lm.hpp"

namespace lfmmi {

/// Throws Error(kIo) when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path &path);
std::ofstream open_output(const std::filesystem::path &path);

/// Text FSA: optional `#label_space N` line, then `src dst label weight` arc
/// lines and `state weight` final lines. Weights are natural logs; `-inf` is
/// allowed on arcs only.
void write_fsa(std::ostream &out, const Fsa &fsa);
Fsa read_fsa(std::istream &in);

/// Dense matrix: a `rows cols` header, then one line per row.
void write_matrix(std::ostream &out, const Eigen::MatrixXd &m);
Eigen::MatrixXd read_matrix(std::istream &in);

/// Transducer table: a `T U+1 V` header, then T * (U+1) rows of V values,
/// row index t * (U+1) + u.
void write_joint_table(std::ostream &out, const TableJointScorer &table);
TableJointScorer read_joint_table(std::istream &in);

/// {"<s>": {"a": logp, ..., "</s>": logp}, "a": {...}}; absent entries are
/// log-zero.
nlohmann::json phone_lm_to_json(const PhoneBigramLm &lm,
                                const SymbolTable &phones);
PhoneBigramLm phone_lm_from_json(const nlohmann::json &j,
                                 const SymbolTable &phones);

/// One whitespace-separated transcript per line.
std::vector<std::vector<std::string>> read_transcripts(std::istream &in);
void write_transcripts(std::ostream &out,
                       const std::vector<std::vector<std::string>> &lines);

/// Lines of `id token ...`.
std::vector<Utterance> read_utterances(std::istream &in);
void write_utterances(std::ostream &out, const std::vector<Utterance> &utts);

/// {"id", "hyps": [{"tokens", "fused", "base", "mmi", "lm"[, "flagged"]}]
/// [, "fallback"]}. Log-zero scores are written as null.
nlohmann::json nbest_to_json(const NBestList &nbest,
                             const TokenInventory &tokens);
NBestList nbest_from_json(const nlohmann::json &j,
                          const TokenInventory &tokens);
std::vector<NBestList> read_nbest_jsonl(std::istream &in,
                                        const TokenInventory &tokens);

/// Shortest text that parses back to the same double; `-inf` for log-zero.
std::string format_double(double x);

}  // namespace lfmmi
