#include "commands.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "lfmmi/corpus.hpp"
#include "lfmmi/decoder.hpp"
#include "lfmmi/error.hpp"
#include "lfmmi/fsa_algo.hpp"
#include "lfmmi/graph_compiler.hpp"
#include "lfmmi/io.hpp"
#include "lfmmi/mmi_scorer.hpp"
#include "lfmmi/phone_lm.hpp"
#include "lfmmi/scorers.hpp"

namespace lfmmi::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be stored
// by index so output order does not depend on scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)> &fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string read_file(const fs::path &path) {
  std::ifstream in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out = open_output(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

json decode_config_json(const DecodeConfig &c) {
  return {{"beam", c.beam},
          {"mmi_prefix_weight", c.mmi_prefix_weight},
          {"mmi_align_weight", c.mmi_align_weight},
          {"rescore_lambda", c.rescore_lambda},
          {"lm_weight", c.lm_weight},
          {"max_output_per_frame", c.max_output_per_frame},
          {"max_output_length", c.max_output_length},
          {"zero_floor", c.zero_floor},
          {"ali_floor", c.ali_floor},
          {"end_detect", c.end_detect},
          {"nbest", c.nbest_size()}};
}

json corpus_spec_json(const CorpusSpec &s) {
  return {{"num_words", s.num_words},
          {"min_phones_per_word", s.min_phones_per_word},
          {"max_phones_per_word", s.max_phones_per_word},
          {"min_words_per_utterance", s.min_words_per_utterance},
          {"max_words_per_utterance", s.max_words_per_utterance},
          {"num_utterances", s.num_utterances},
          {"num_train", s.num_train},
          {"num_phones", s.num_phones},
          {"tau", s.tau},
          {"overlap", s.overlap},
          {"seed", s.seed},
          {"mean_phone_duration", s.mean_phone_duration},
          {"spelling", s.spelling}};
}

// Shared state of one invocation.
struct Invocation {
  std::vector<std::string> args;
  std::string command;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  std::string config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json decode_config;
  json corpus_spec;

  void input(const fs::path &p) { inputs.push_back(p.string()); }

  // Writes the primary output to --out or the stream, plus the manifest.
  void emit(const std::string &text, std::ostream &stream) {
    if (out.empty()) {
      stream << text;
      return;
    }
    write_file(out, text);
    outputs.push_back(out);
    write_manifest(fs::path(out).string() + ".manifest.json");
  }

  void write_manifest(const fs::path &path) const {
    json m = {{"command", command},
              {"args", args},
              {"seed", seed},
              {"jobs", jobs},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs},
              {"tool_version", kToolVersion}};
    if (!decode_config.is_null()) m["decode_config"] = decode_config;
    if (!corpus_spec.is_null()) m["corpus_spec"] = corpus_spec;
    write_file(path, m.dump(2) + "\n");
  }
};

// Paths shared by the model-reading commands; --corpus fills in defaults.
struct ModelPaths {
  std::string corpus;
  std::string lexicon;
  std::string phones;
  std::string tokens;
  std::string phone_lm;
  std::string emissions_dir;
  std::string transcripts;
  std::string train;

  void add_options(CLI::App *app, bool with_transcripts = true) {
    app->add_option("--corpus", corpus, "Corpus directory supplying defaults");
    app->add_option("--lexicon", lexicon, "Lexicon file");
    app->add_option("--phones", phones, "Phone symbol table");
    app->add_option("--tokens", tokens, "Token symbol table");
    app->add_option("--phone-lm", phone_lm, "Phone bigram LM (JSON)");
    app->add_option("--emissions-dir", emissions_dir, "Emission matrices");
    app->add_option("--train", train, "Training transcripts");
    if (with_transcripts) {
      app->add_option("--transcripts", transcripts,
                      "Utterance list (id followed by words)");
    }
  }

  void resolve() {
    if (corpus.empty()) return;
    const fs::path dir(corpus);
    auto fill = [&](std::string &field, const char *name) {
      if (field.empty()) field = (dir / name).string();
    };
    fill(lexicon, "lexicon.txt");
    fill(phones, "phones.txt");
    fill(tokens, "tokens.txt");
    fill(emissions_dir, "emissions");
    fill(transcripts, "test.txt");
    fill(train, "train.txt");
    if (phone_lm.empty() && fs::exists(dir / "phone_lm.json")) {
      phone_lm = (dir / "phone_lm.json").string();
    }
  }

  static const std::string &require(const std::string &v, const char *flag) {
    if (v.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("missing ") + flag + " (or --corpus)");
    }
    return v;
  }
};

struct Model {
  std::shared_ptr<const SymbolTable> phones;
  std::shared_ptr<Lexicon> lexicon;
  std::shared_ptr<const SymbolTable> tokens;
};

Model load_lexicon(const ModelPaths &p, Invocation &inv, bool with_tokens) {
  Model m;
  inv.input(ModelPaths::require(p.phones, "--phones"));
  std::ifstream phones_in = open_input(p.phones);
  m.phones = std::make_shared<const SymbolTable>(SymbolTable::read(phones_in));
  inv.input(ModelPaths::require(p.lexicon, "--lexicon"));
  std::ifstream lex_in = open_input(p.lexicon);
  m.lexicon = std::make_shared<Lexicon>(Lexicon::read(lex_in, m.phones));
  if (with_tokens) {
    inv.input(ModelPaths::require(p.tokens, "--tokens"));
    std::ifstream tok_in = open_input(p.tokens);
    m.tokens = std::make_shared<const SymbolTable>(SymbolTable::read(tok_in));
  }
  return m;
}

PhoneBigramLm load_phone_lm(const ModelPaths &p, const SymbolTable &phones,
                            Invocation &inv) {
  inv.input(ModelPaths::require(p.phone_lm, "--phone-lm"));
  json j;
  try {
    j = json::parse(read_file(p.phone_lm));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, p.phone_lm + ": " + e.what());
  }
  return phone_lm_from_json(j, phones);
}

std::vector<Utterance> load_utterances(const ModelPaths &p, Invocation &inv) {
  inv.input(ModelPaths::require(p.transcripts, "--transcripts"));
  std::ifstream in = open_input(p.transcripts);
  return read_utterances(in);
}

Emissions load_emissions(const fs::path &path,
                         std::shared_ptr<const SymbolTable> alphabet) {
  std::ifstream in = open_input(path);
  try {
    return Emissions(read_matrix(in), std::move(alphabet));
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

TokenInventory token_inventory(const Model &m, bool lookahead) {
  TokenInventory inv = TokenInventory::from_symbols(m.tokens);
  if (inv.lookahead != lookahead) {
    throw Error(ErrorCode::kInvalidArgument,
                lookahead ? "--lookahead needs a token table with a separator"
                          : "spelling token tables need --lookahead");
  }
  return inv;
}

void add_decode_options(CLI::App *app, DecodeConfig &cfg) {
  app->add_option("--beam", cfg.beam, "Beam size")->capture_default_str();
  app->add_option("--mmi-prefix-weight", cfg.mmi_prefix_weight,
                  "Weight of the MMI prefix score (label-synchronous)")
      ->capture_default_str();
  app->add_option("--mmi-align-weight", cfg.mmi_align_weight,
                  "Weight of the MMI alignment score (time-synchronous)")
      ->capture_default_str();
  app->add_option("--rescore-lambda", cfg.rescore_lambda,
                  "Base-score weight in rescoring")
      ->capture_default_str();
  app->add_option("--lm-weight", cfg.lm_weight, "Token LM weight")
      ->capture_default_str();
  app->add_option("--max-per-frame", cfg.max_output_per_frame,
                  "Tokens emitted per frame (time-synchronous)")
      ->capture_default_str();
  app->add_option("--max-length", cfg.max_output_length,
                  "Longest hypothesis; 0 = automatic")
      ->capture_default_str();
  app->add_option("--nbest-size", cfg.nbest, "Entries per list; 0 = beam")
      ->capture_default_str();
  app->add_option("--end-detect", cfg.end_detect,
                  "Stop label-synchronous search early")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------

void cmd_gen(CorpusSpec spec, Invocation &inv) {
  spec.seed = inv.seed;
  spec.validate();
  if (inv.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "gen needs --out DIR");
  }
  inv.corpus_spec = corpus_spec_json(spec);
  const fs::path dir(inv.out);
  const GeneratedCorpus corpus = generate_corpus(spec);
  const TokenInventory tokens = spec.spelling
                                    ? TokenInventory::spelling(corpus.lexicon)
                                    : TokenInventory::words(corpus.lexicon);
  auto save = [&](const fs::path &path, const std::function<void(std::ostream &)> &fn) {
    std::ostringstream buf;
    fn(buf);
    write_file(path, buf.str());
    inv.outputs.push_back(path.string());
  };
  save(dir / "phones.txt", [&](std::ostream &o) { corpus.lexicon.phones().write(o); });
  save(dir / "lexicon.txt", [&](std::ostream &o) { corpus.lexicon.write(o); });
  save(dir / "tokens.txt", [&](std::ostream &o) { tokens.symbols->write(o); });
  save(dir / "train.txt", [&](std::ostream &o) { write_transcripts(o, corpus.train); });
  save(dir / "test.txt", [&](std::ostream &o) { write_utterances(o, corpus.test); });
  std::vector<Utterance> refs;
  for (const Utterance &u : corpus.test) {
    refs.push_back({u.id, tokens.to_strings(tokens.tokens_of_words(u.words))});
  }
  save(dir / "refs.txt", [&](std::ostream &o) { write_utterances(o, refs); });

  const int n = static_cast<int>(corpus.test.size());
  parallel_for(n, inv.jobs, [&](int i) {
    const Utterance &u = corpus.test[i];
    const AlignedUtterance a = synthesize_emissions(
        u.words, corpus.lexicon, tokens, spec.tau,
        utterance_seed(spec.seed, static_cast<std::uint64_t>(i)),
        spec.mean_phone_duration);
    const fs::path base = dir / "emissions" / u.id;
    std::ostringstream phone, token, joint;
    write_matrix(phone, a.phone_emissions.logp());
    write_matrix(token, a.token_emissions.logp());
    write_joint_table(joint, TableJointScorer(a.num_frames(), a.num_positions(),
                                              a.joint_rows));
    write_file(base.string() + ".mat", phone.str());
    write_file(base.string() + ".tok.mat", token.str());
    write_file(base.string() + ".nt.mat", joint.str());
  });
  inv.outputs.push_back((dir / "emissions").string());
  inv.write_manifest(dir / "gen.manifest.json");
}

void cmd_compile(ModelPaths paths, double lm_k, Invocation &inv) {
  paths.resolve();
  if (inv.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "compile needs --out DIR");
  }
  const fs::path dir(inv.out);
  Model m = load_lexicon(paths, inv, false);
  std::optional<PhoneBigramLm> lm;
  if (!paths.phone_lm.empty() &&
      fs::absolute(paths.phone_lm) != fs::absolute(dir / "phone_lm.json")) {
    lm = load_phone_lm(paths, *m.phones, inv);
  } else {
    inv.input(ModelPaths::require(paths.train, "--train"));
    std::ifstream in = open_input(paths.train);
    lm = estimate_phone_bigram(read_transcripts(in), *m.lexicon, lm_k);
    write_file(dir / "phone_lm.json",
               phone_lm_to_json(*lm, *m.phones).dump(2) + "\n");
    inv.outputs.push_back((dir / "phone_lm.json").string());
  }
  std::ostringstream den;
  write_fsa(den, compile_denominator(*lm));
  write_file(dir / "den.fsa", den.str());
  inv.outputs.push_back((dir / "den.fsa").string());
  if (!paths.transcripts.empty() && paths.corpus.empty()) {
    for (const Utterance &u : load_utterances(paths, inv)) {
      std::ostringstream num;
      write_fsa(num, compile_numerator(u.words, *m.lexicon));
      write_file(dir / "num" / (u.id + ".fsa"), num.str());
    }
    inv.outputs.push_back((dir / "num").string());
  }
  inv.write_manifest(dir / "compile.manifest.json");
}

void cmd_score(ModelPaths paths, Invocation &inv, std::ostream &out) {
  paths.resolve();
  Model m = load_lexicon(paths, inv, false);
  const auto den_graph =
      std::make_shared<const Fsa>(compile_denominator(load_phone_lm(paths, *m.phones, inv)));
  const std::vector<Utterance> utts = load_utterances(paths, inv);
  inv.input(ModelPaths::require(paths.emissions_dir, "--emissions-dir"));
  std::vector<double> scores(utts.size());
  parallel_for(static_cast<int>(utts.size()), inv.jobs, [&](int i) {
    const Emissions e = load_emissions(
        fs::path(paths.emissions_dir) / (utts[i].id + ".mat"), m.phones);
    const DenominatorCache den = precompute_denominator(e, den_graph);
    try {
      scores[i] = mmi_log_posterior(
          e, compile_numerator(utts[i].words, *m.lexicon), den);
    } catch (const Error &err) {
      throw Error(err.code(), utts[i].id + ": " + err.what());
    }
  });
  std::ostringstream text;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    text << utts[i].id << '\t' << format_double(scores[i]) << '\n';
  }
  inv.emit(text.str(), out);
}

// One random toy: up to 4 phones, up to 5 words, T <= max_frames.
struct GradInstance {
  Eigen::MatrixXd logits;
  Fsa num;
  Fsa den;
};

GradInstance random_grad_instance(std::uint64_t seed, int max_frames) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int num_phones = uniform(2, 4);
  auto phones = std::make_shared<SymbolTable>();
  for (int i = 0; i < num_phones; ++i) phones->add(std::string(1, 'a' + i));
  Lexicon lex(phones);
  const int num_words = uniform(2, 5);
  while (lex.size() < num_words) {
    std::vector<LabelId> pron(uniform(1, 2));
    std::string name;
    for (auto &p : pron) {
      p = uniform(2, num_phones + 1);
      name += phones->symbol(p);
    }
    if (!lex.contains(name)) lex.add(name, pron);
  }
  const std::vector<std::string> words = lex.words();
  const int frames = uniform(2, max_frames);
  std::vector<std::string> transcript;
  do {
    transcript.assign(uniform(1, 2), "");
    for (auto &w : transcript) w = words[uniform(0, num_words - 1)];
  } while (min_alignment_length(expand_to_phones(transcript, lex)) > frames);
  std::vector<std::vector<std::string>> train(4);
  for (auto &t : train) {
    t.assign(uniform(1, 3), "");
    for (auto &w : t) w = words[uniform(0, num_words - 1)];
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd logits(frames, num_phones + 2);
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    logits(t, 0) = kLogZero<double>;
    for (Eigen::Index v = 1; v < logits.cols(); ++v) logits(t, v) = normal(rng);
  }
  return {logits, compile_numerator(transcript, lex),
          compile_denominator(estimate_phone_bigram(train, lex))};
}

void cmd_gradcheck(int instances, int max_frames, double step,
                   Invocation &inv, std::ostream &out) {
  if (instances < 1 || max_frames < 2 || !(step > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad gradcheck parameters");
  }
  json report = json::array();
  double worst_rel = 0.0, worst_row = 0.0;
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = utterance_seed(inv.seed, k);
    GradInstance g = random_grad_instance(seed, max_frames);
    const LossAndGradient lg =
        lfmmi_loss_and_grad(Emissions::from_logits(g.logits), g.num, g.den);
    Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(g.logits.rows(), g.logits.cols());
    for (Eigen::Index t = 0; t < g.logits.rows(); ++t) {
      for (Eigen::Index v = 1; v < g.logits.cols(); ++v) {
        Eigen::MatrixXd plus = g.logits, minus = g.logits;
        plus(t, v) += step;
        minus(t, v) -= step;
        const double lp =
            lfmmi_loss_and_grad(Emissions::from_logits(plus), g.num, g.den).loss;
        const double lm =
            lfmmi_loss_and_grad(Emissions::from_logits(minus), g.num, g.den).loss;
        fd(t, v) = (lp - lm) / (2 * step);
      }
    }
    const double scale = std::max({lg.grad.norm(), fd.norm(), 1e-12});
    const double rel = (lg.grad - fd).norm() / scale;
    const double row = lg.grad.rowwise().sum().cwiseAbs().maxCoeff();
    worst_rel = std::max(worst_rel, rel);
    worst_row = std::max(worst_row, row);
    report.push_back({{"seed", seed},
                      {"frames", g.logits.rows()},
                      {"labels", g.logits.cols()},
                      {"loss", lg.loss},
                      {"rel_error", rel},
                      {"max_row_sum", row}});
  }
  json summary = {{"instances", report},
                  {"max_rel_error", worst_rel},
                  {"max_row_sum", worst_row},
                  {"pass", worst_rel < 1e-4 && worst_row < 1e-8}};
  inv.emit(summary.dump(2) + "\n", out);
}

void cmd_decode(ModelPaths paths, const std::string &mode, bool lookahead,
                DecodeConfig cfg, Invocation &inv, std::ostream &out) {
  paths.resolve();
  cfg.validate();
  inv.decode_config = decode_config_json(cfg);
  if (mode != "aed" && mode != "nt") {
    throw Error(ErrorCode::kInvalidArgument, "--mode must be aed or nt");
  }
  Model m = load_lexicon(paths, inv, true);
  const TokenInventory tokens = token_inventory(m, lookahead);
  const auto den_graph = std::make_shared<const Fsa>(
      compile_denominator(load_phone_lm(paths, *m.phones, inv)));
  const std::vector<Utterance> utts = load_utterances(paths, inv);
  inv.input(ModelPaths::require(paths.emissions_dir, "--emissions-dir"));

  std::unique_ptr<NgramTokenLm> lm;
  if (cfg.lm_weight != 0.0) {
    if (mode != "aed") {
      throw Error(ErrorCode::kInvalidArgument,
                  "--lm-weight applies to aed decoding only");
    }
    inv.input(ModelPaths::require(paths.train, "--train"));
    std::ifstream in = open_input(paths.train);
    std::vector<std::vector<LabelId>> train;
    for (const auto &words : read_transcripts(in)) {
      train.push_back(tokens.tokens_of_words(words));
    }
    lm = std::make_unique<NgramTokenLm>(train, tokens.symbols->size());
  }

  std::vector<std::string> lines(utts.size());
  parallel_for(static_cast<int>(utts.size()), inv.jobs, [&](int i) {
    const fs::path base = fs::path(paths.emissions_dir) / utts[i].id;
    const Emissions phones = load_emissions(base.string() + ".mat", m.phones);
    const MmiContext ctx = MmiContext::make(phones, *m.lexicon, den_graph);
    NBestList nbest;
    if (mode == "aed") {
      const CtcPrefixScorer ctc(
          load_emissions(base.string() + ".tok.mat", m.tokens));
      nbest = aed_beam_search(ctc, lm.get(), ctx, tokens, cfg);
    } else {
      std::ifstream in = open_input(base.string() + ".nt.mat");
      const TableJointScorer joint = read_joint_table(in);
      nbest = nt_alsd_beam_search(joint, ctx, tokens, cfg);
    }
    nbest.id = utts[i].id;
    lines[i] = nbest_to_json(nbest, tokens).dump() + "\n";
  });
  std::string text;
  for (const auto &l : lines) text += l;
  inv.emit(text, out);
}

void cmd_rescore(ModelPaths paths, const std::string &nbest_path,
                 bool lookahead, bool with_den, DecodeConfig cfg,
                 Invocation &inv, std::ostream &out) {
  paths.resolve();
  cfg.validate();
  inv.decode_config = decode_config_json(cfg);
  Model m = load_lexicon(paths, inv, true);
  const TokenInventory tokens = token_inventory(m, lookahead);
  std::shared_ptr<const Fsa> den_graph;
  if (with_den) {
    den_graph = std::make_shared<const Fsa>(
        compile_denominator(load_phone_lm(paths, *m.phones, inv)));
  }
  inv.input(ModelPaths::require(nbest_path, "--nbest"));
  std::ifstream in = open_input(nbest_path);
  const std::vector<NBestList> lists = read_nbest_jsonl(in, tokens);
  inv.input(ModelPaths::require(paths.emissions_dir, "--emissions-dir"));

  std::vector<std::string> lines(lists.size());
  parallel_for(static_cast<int>(lists.size()), inv.jobs, [&](int i) {
    const Emissions phones = load_emissions(
        fs::path(paths.emissions_dir) / (lists[i].id + ".mat"), m.phones);
    std::optional<DenominatorCache> den;
    if (den_graph) den = precompute_denominator(phones, den_graph);
    const NBestList rescored =
        rescore_nbest(lists[i], phones, *m.lexicon, TopologyConfig{}, tokens,
                      cfg, den ? &*den : nullptr);
    lines[i] = nbest_to_json(rescored, tokens).dump() + "\n";
  });
  std::string text;
  for (const auto &l : lines) text += l;
  inv.emit(text, out);
}

void cmd_eval(const std::string &hyps_path, const std::string &refs_path,
              Invocation &inv, std::ostream &out) {
  inv.input(ModelPaths::require(hyps_path, "--hyps"));
  inv.input(ModelPaths::require(refs_path, "--refs"));
  std::map<std::string, std::vector<std::string>> best;
  {
    std::ifstream in = open_input(hyps_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        std::vector<std::string> tokens;
        if (!j.at("hyps").empty()) {
          tokens = j.at("hyps")[0].at("tokens").get<std::vector<std::string>>();
        }
        best[j.at("id").get<std::string>()] = std::move(tokens);
      } catch (const json::exception &e) {
        throw Error(ErrorCode::kParse, hyps_path + " line " +
                                           std::to_string(lineno) + ": " +
                                           e.what());
      }
    }
  }
  std::ifstream refs_in = open_input(refs_path);
  const std::vector<Utterance> refs = read_utterances(refs_in);
  std::vector<std::vector<std::string>> hyp_list, ref_list;
  for (const Utterance &r : refs) {
    auto it = best.find(r.id);
    if (it == best.end()) {
      throw Error(ErrorCode::kInvalidArgument, "no hypothesis for " + r.id);
    }
    hyp_list.push_back(it->second);
    ref_list.push_back(r.words);
  }
  const ErrorRate er = evaluate_error_rate(hyp_list, ref_list);
  const json report = {{"utterances", refs.size()},
                       {"ref_tokens", er.ref_tokens},
                       {"substitutions", er.substitutions},
                       {"insertions", er.insertions},
                       {"deletions", er.deletions},
                       {"errors", er.errors()},
                       {"token_error_rate", er.rate()}};
  inv.emit(report.dump(2) + "\n", out);
}

int run_replay(const std::string &manifest_path, std::ostream &out,
               std::ostream &err) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
    return run(m.at("args").get<std::vector<std::string>>(), out, err);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, manifest_path + ": " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"LF-MMI scoring, decoding and rescoring toolkit", "lfmmi"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Invocation inv;
  inv.args = args;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--seed", inv.seed, "Random seed")->capture_default_str();
    sub->add_option("--jobs", inv.jobs, "Worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", inv.out, "Output path (stdout when omitted)");
    sub->set_config("--config", "", "TOML/INI file with option defaults");
  };

  CorpusSpec spec;
  auto *gen = app.add_subcommand("gen", "Generate a synthetic corpus");
  gen->add_option("--num-words", spec.num_words)->capture_default_str();
  gen->add_option("--min-phones", spec.min_phones_per_word)->capture_default_str();
  gen->add_option("--max-phones", spec.max_phones_per_word)->capture_default_str();
  gen->add_option("--min-words", spec.min_words_per_utterance)->capture_default_str();
  gen->add_option("--max-words", spec.max_words_per_utterance)->capture_default_str();
  gen->add_option("--num-utts", spec.num_utterances)->capture_default_str();
  gen->add_option("--num-train", spec.num_train)->capture_default_str();
  gen->add_option("--num-phones", spec.num_phones)->capture_default_str();
  gen->add_option("--tau", spec.tau, "Noise temperature")->capture_default_str();
  gen->add_option("--overlap", spec.overlap, "Shared leading phones per word pair")
      ->capture_default_str();
  gen->add_option("--mean-duration", spec.mean_phone_duration)->capture_default_str();
  gen->add_flag("--spelling", spec.spelling, "Character tokens with a word separator");
  add_common(gen);

  ModelPaths paths;
  double lm_k = 1.0;
  auto *compile = app.add_subcommand("compile", "Estimate the phone LM and compile graphs");
  paths.add_options(compile);
  compile->add_option("--lm-k", lm_k, "Add-k smoothing")->capture_default_str();
  add_common(compile);

  auto *score = app.add_subcommand("score", "MMI log-posteriors of transcripts");
  paths.add_options(score);
  add_common(score);

  int instances = 20, max_frames = 6;
  double step = 1e-5;
  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--instances", instances)->capture_default_str();
  gradcheck->add_option("--max-frames", max_frames)->capture_default_str();
  gradcheck->add_option("--step", step)->capture_default_str();
  add_common(gradcheck);

  DecodeConfig cfg;
  std::string mode = "aed";
  bool lookahead = false;
  auto *decode = app.add_subcommand("decode", "Beam search with MMI scores");
  paths.add_options(decode);
  decode->add_option("--mode", mode, "aed or nt")
      ->capture_default_str()
      ->check(CLI::IsMember({"aed", "nt"}));
  decode->add_flag("--lookahead", lookahead, "Spelling tokens with look-ahead");
  add_decode_options(decode, cfg);
  add_common(decode);

  std::string nbest_path;
  bool with_den = false;
  auto *rescore = app.add_subcommand("rescore", "Re-rank N-best lists");
  paths.add_options(rescore, false);
  rescore->add_option("--nbest", nbest_path, "N-best JSONL")->required();
  rescore->add_flag("--lookahead", lookahead, "Spelling tokens");
  rescore->add_flag("--with-denominator", with_den,
                    "Use the full MMI posterior instead of the numerator");
  add_decode_options(rescore, cfg);
  add_common(rescore);

  std::string hyps_path, refs_path;
  auto *eval = app.add_subcommand("eval", "Token error rate of 1-best hypotheses");
  eval->add_option("--hyps", hyps_path, "N-best JSONL")->required();
  eval->add_option("--refs", refs_path, "Reference tokens")->required();
  add_common(eval);

  std::string manifest_path;
  auto *replay = app.add_subcommand("replay", "Re-run the command of a manifest");
  replay->add_option("manifest", manifest_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Success &) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: USAGE: " << e.what() << '\n';
    return 2;
  }

  try {
    CLI::App *sub = app.get_subcommands().front();
    inv.command = sub->get_name();
    if (sub != replay) {
      const CLI::Option *config = sub->get_option_no_throw("--config");
      if (config && config->count() > 0) inv.config = config->as<std::string>();
    }
    if (sub == gen) cmd_gen(spec, inv);
    else if (sub == compile) cmd_compile(paths, lm_k, inv);
    else if (sub == score) cmd_score(paths, inv, out);
    else if (sub == gradcheck) cmd_gradcheck(instances, max_frames, step, inv, out);
    else if (sub == decode) cmd_decode(paths, mode, lookahead, cfg, inv, out);
    else if (sub == rescore) cmd_rescore(paths, nbest_path, lookahead, with_den, cfg, inv, out);
    else if (sub == eval) cmd_eval(hyps_path, refs_path, inv, out);
    else if (sub == replay) return run_replay(manifest_path, out, err);
  } catch (const Error &e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    err << "error: INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lfmmi::cli
