#include "lfmmi/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "lfmmi/error.hpp"

namespace lfmmi {
namespace {

using nlohmann::json;

[[noreturn]] void parse_error(const std::string &what, int lineno) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string &field, int lineno) {
  if (field == "-inf") return kLogZero<double>;
  double value = 0.0;
  const char *end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_error("bad number '" + field + "'", lineno);
  }
  return value;
}

long parse_int(const std::string &field, int lineno) {
  long value = 0;
  const char *end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    parse_error("bad integer '" + field + "'", lineno);
  }
  return value;
}

std::vector<std::string> split_fields(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> fields;
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

json score_json(double x) {
  return is_log_zero(x) ? json(nullptr) : json(x);
}

double score_from_json(const json &j) {
  return j.is_null() ? kLogZero<double> : j.get<double>();
}

// Reads `rows` lines of `cols` numbers after a header.
Eigen::MatrixXd read_rows(std::istream &in, long rows, long cols,
                          int &lineno) {
  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) parse_error("missing matrix rows", lineno);
    ++lineno;
    const auto fields = split_fields(line);
    if (static_cast<long>(fields.size()) != cols) {
      parse_error("expected " + std::to_string(cols) + " values", lineno);
    }
    for (long c = 0; c < cols; ++c) m(r, c) = parse_double(fields[c], lineno);
  }
  return m;
}

}  // namespace

std::string format_double(double x) {
  if (is_log_zero(x)) return "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::ifstream open_input(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path &path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

void write_fsa(std::ostream &out, const Fsa &fsa) {
  if (fsa.label_space()) out << "#label_space " << *fsa.label_space() << '\n';
  for (const Arc &arc : fsa.arcs()) {
    out << arc.src << ' ' << arc.dst << ' ' << arc.label << ' '
        << format_double(arc.weight.value()) << '\n';
  }
  for (StateId s = 0; s < fsa.num_states(); ++s) {
    if (fsa.is_final(s)) {
      out << s << ' ' << format_double(fsa.final_weight(s).value()) << '\n';
    }
  }
}

Fsa read_fsa(std::istream &in) {
  Fsa fsa;
  std::string line;
  int lineno = 0;
  auto ensure_state = [&](long s) {
    if (s < 0) parse_error("negative state id", lineno);
    while (fsa.num_states() <= s) fsa.add_state();
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields[0] == "#label_space") {
      if (fields.size() != 2) parse_error("bad label space line", lineno);
      fsa.set_label_space(static_cast<int>(parse_int(fields[1], lineno)));
    } else if (fields.size() == 4) {
      const long src = parse_int(fields[0], lineno);
      const long dst = parse_int(fields[1], lineno);
      const long label = parse_int(fields[2], lineno);
      if (label < 0) parse_error("negative label", lineno);
      ensure_state(std::max(src, dst));
      fsa.add_arc(static_cast<StateId>(src), static_cast<StateId>(dst),
                  static_cast<LabelId>(label),
                  LogWeight(parse_double(fields[3], lineno)));
    } else if (fields.size() == 2) {
      const long s = parse_int(fields[0], lineno);
      const double w = parse_double(fields[1], lineno);
      if (is_log_zero(w)) parse_error("final weight is log-zero", lineno);
      ensure_state(s);
      fsa.set_final(static_cast<StateId>(s), LogWeight(w));
    } else {
      parse_error("expected 2 or 4 fields", lineno);
    }
  }
  fsa.validate();
  return fsa;
}

void write_matrix(std::ostream &out, const Eigen::MatrixXd &m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream &in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) parse_error("missing matrix header", lineno);
  const auto header = split_fields(line);
  if (header.size() != 2) parse_error("matrix header needs 2 fields", lineno);
  const long rows = parse_int(header[0], lineno);
  const long cols = parse_int(header[1], lineno);
  if (rows < 0 || cols < 0) parse_error("negative matrix size", lineno);
  return read_rows(in, rows, cols, lineno);
}

void write_joint_table(std::ostream &out, const TableJointScorer &table) {
  out << table.num_frames() << ' ' << table.num_positions() << ' '
      << table.vocab_size() << '\n';
  const Eigen::MatrixXd &rows = table.rows();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(rows(r, c));
    }
    out << '\n';
  }
}

TableJointScorer read_joint_table(std::istream &in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) parse_error("missing table header", lineno);
  const auto header = split_fields(line);
  if (header.size() != 3) parse_error("table header needs 3 fields", lineno);
  const long frames = parse_int(header[0], lineno);
  const long positions = parse_int(header[1], lineno);
  const long vocab = parse_int(header[2], lineno);
  if (frames < 1 || positions < 1 || vocab < 2) {
    parse_error("bad table dimensions", lineno);
  }
  Eigen::MatrixXd rows = read_rows(in, frames * positions, vocab, lineno);
  return TableJointScorer(static_cast<int>(frames),
                          static_cast<int>(positions), std::move(rows));
}

json phone_lm_to_json(const PhoneBigramLm &lm, const SymbolTable &phones) {
  auto name = [&](LabelId id, bool as_context) -> std::string {
    if (id == PhoneBigramLm::kBoundary) return as_context ? "<s>" : "</s>";
    return phones.symbol(id);
  };
  std::vector<LabelId> ids{PhoneBigramLm::kBoundary};
  for (LabelId p : lm.phone_ids()) ids.push_back(p);
  json j = json::object();
  for (LabelId ctx : ids) {
    json row = json::object();
    for (LabelId next : ids) {
      const double lp = lm.logp(ctx, next);
      if (!is_log_zero(lp)) row[name(next, false)] = lp;
    }
    j[name(ctx, true)] = std::move(row);
  }
  return j;
}

PhoneBigramLm phone_lm_from_json(const json &j, const SymbolTable &phones) {
  const int n = phones.size() - 2;
  Eigen::MatrixXd table =
      Eigen::MatrixXd::Constant(n + 1, n + 1, kLogZero<double>);
  auto index = [&](const std::string &sym, bool as_context) -> Eigen::Index {
    if (sym == (as_context ? "<s>" : "</s>")) return 0;
    const auto id = phones.find(sym);
    if (!id || *id < 2) {
      throw Error(ErrorCode::kParse, "phone LM uses unknown symbol '" + sym + "'");
    }
    return *id - 1;
  };
  if (!j.is_object()) throw Error(ErrorCode::kParse, "phone LM must be an object");
  try {
    for (const auto &[ctx, row] : j.items()) {
      const Eigen::Index r = index(ctx, true);
      for (const auto &[next, lp] : row.items()) {
        table(r, index(next, false)) = lp.get<double>();
      }
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("phone LM: ") + e.what());
  }
  return PhoneBigramLm(n, std::move(table));
}

std::vector<std::vector<std::string>> read_transcripts(std::istream &in) {
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(split_fields(line));
  return lines;
}

void write_transcripts(std::ostream &out,
                       const std::vector<std::vector<std::string>> &lines) {
  for (const auto &words : lines) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      out << (i ? " " : "") << words[i];
    }
    out << '\n';
  }
}

std::vector<Utterance> read_utterances(std::istream &in) {
  std::vector<Utterance> utts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    Utterance u{fields[0], {}};
    u.words.assign(fields.begin() + 1, fields.end());
    utts.push_back(std::move(u));
  }
  return utts;
}

void write_utterances(std::ostream &out, const std::vector<Utterance> &utts) {
  for (const Utterance &u : utts) {
    out << u.id;
    for (const std::string &w : u.words) out << ' ' << w;
    out << '\n';
  }
}

json nbest_to_json(const NBestList &nbest, const TokenInventory &tokens) {
  json hyps = json::array();
  for (const NBestEntry &e : nbest.entries) {
    json h = {{"tokens", tokens.to_strings(e.tokens)},
              {"fused", score_json(e.fused)},
              {"base", score_json(e.base)},
              {"mmi", score_json(e.mmi)},
              {"lm", score_json(e.lm)}};
    if (e.flagged) h["flagged"] = true;
    hyps.push_back(std::move(h));
  }
  json j = {{"id", nbest.id}, {"hyps", std::move(hyps)}};
  if (nbest.fallback) j["fallback"] = true;
  return j;
}

NBestList nbest_from_json(const json &j, const TokenInventory &tokens) {
  NBestList nbest;
  try {
    nbest.id = j.at("id").get<std::string>();
    nbest.fallback = j.value("fallback", false);
    for (const json &h : j.at("hyps")) {
      NBestEntry e;
      e.tokens = tokens.to_ids(h.at("tokens").get<std::vector<std::string>>());
      e.fused = score_from_json(h.at("fused"));
      e.base = score_from_json(h.at("base"));
      e.mmi = score_from_json(h.value("mmi", json(0.0)));
      e.lm = score_from_json(h.value("lm", json(0.0)));
      e.flagged = h.value("flagged", false);
      nbest.entries.push_back(std::move(e));
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("n-best entry: ") + e.what());
  }
  return nbest;
}

std::vector<NBestList> read_nbest_jsonl(std::istream &in,
                                        const TokenInventory &tokens) {
  std::vector<NBestList> lists;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_fields(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      parse_error(e.what(), lineno);
    }
    lists.push_back(nbest_from_json(j, tokens));
  }
  return lists;
}

}  // namespace lfmmi
