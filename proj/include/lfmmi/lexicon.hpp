#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfmmi/symbol_table.hpp"

namespace lfmmi {

/// Word -> phone sequence, one pronunciation per word. Word spellings are kept
/// in a sorted index so every word sharing a spelling prefix is one
/// contiguous range.
class Lexicon {
 public:
  explicit Lexicon(std::shared_ptr<const SymbolTable> phones);

  /// Throws Error(kInvalidArgument) for empty pronunciations, phone ids that
  /// are not real phones (< 2 or outside the table), or duplicate words.
  void add(std::string word, std::vector<LabelId> pronunciation);

  bool contains(std::string_view word) const;
  /// Throws Error(kOov) naming the word.
  const std::vector<LabelId> &pronunciation(std::string_view word) const;
  std::vector<std::string> words_with_prefix(std::string_view prefix) const;
  std::vector<std::string> words() const;
  int size() const { return static_cast<int>(entries_.size()); }

  const SymbolTable &phones() const { return *phones_; }
  const std::shared_ptr<const SymbolTable> &phone_table() const {
    return phones_;
  }
  /// Number of real phones (the phone table minus <eps> and <blk>).
  int num_phones() const { return phones_->size() - 2; }

  /// Lines of `word phone1 phone2 ...` using symbols of `phones`.
  static Lexicon read(std::istream &in,
                      std::shared_ptr<const SymbolTable> phones);
  void write(std::ostream &out) const;

 private:
  std::shared_ptr<const SymbolTable> phones_;
  std::map<std::string, std::vector<LabelId>, std::less<>> entries_;
};

/// Concatenated pronunciations; throws Error(kOov) for unknown tokens.
std::vector<LabelId> expand_to_phones(std::span<const std::string> words,
                                      const Lexicon &lexicon);

}  // namespace lfmmi
