#include "lfmmi/lexicon.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "lfmmi/error.hpp"

namespace lfmmi {

Lexicon::Lexicon(std::shared_ptr<const SymbolTable> phones)
    : phones_(std::move(phones)) {
  if (!phones_) phones_ = std::make_shared<const SymbolTable>();
}

void Lexicon::add(std::string word, std::vector<LabelId> pronunciation) {
  if (pronunciation.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "word '" + word + "' has an empty pronunciation");
  }
  for (LabelId phone : pronunciation) {
    if (phone < 2 || phone >= phones_->size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "word '" + word + "' uses phone id " +
                      std::to_string(phone) + " outside the phone table");
    }
  }
  if (!entries_.emplace(word, std::move(pronunciation)).second) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate word '" + word + "'");
  }
}

bool Lexicon::contains(std::string_view word) const {
  return entries_.find(word) != entries_.end();
}

const std::vector<LabelId> &Lexicon::pronunciation(
    std::string_view word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kOov,
                "token '" + std::string(word) + "' is not in the lexicon");
  }
  return it->second;
}

std::vector<std::string> Lexicon::words_with_prefix(
    std::string_view prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix);
       it != entries_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::vector<std::string> Lexicon::words() const {
  return words_with_prefix("");
}

Lexicon Lexicon::read(std::istream &in,
                      std::shared_ptr<const SymbolTable> phones) {
  Lexicon lexicon(std::move(phones));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string word, symbol;
    if (!(fields >> word)) continue;
    std::vector<LabelId> pronunciation;
    while (fields >> symbol) {
      const auto id = lexicon.phones_->find(symbol);
      if (!id) {
        throw Error(ErrorCode::kParse, "lexicon line " +
                                           std::to_string(lineno) +
                                           ": unknown phone '" + symbol + "'");
      }
      pronunciation.push_back(*id);
    }
    try {
      lexicon.add(word, std::move(pronunciation));
    } catch (const Error &e) {
      throw Error(ErrorCode::kParse,
                  "lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lexicon;
}

void Lexicon::write(std::ostream &out) const {
  for (const auto &[word, pronunciation] : entries_) {
    out << word;
    for (LabelId phone : pronunciation) out << ' ' << phones_->symbol(phone);
    out << '\n';
  }
}

std::vector<LabelId> expand_to_phones(std::span<const std::string> words,
                                      const Lexicon &lexicon) {
  std::vector<LabelId> phones;
  for (const std::string &word : words) {
    const auto &pron = lexicon.pronunciation(word);
    phones.insert(phones.end(), pron.begin(), pron.end());
  }
  return phones;
}

}  // namespace lfmmi
