#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lfmmi/fsa.hpp"

namespace lfmmi {

inline constexpr std::string_view kEpsilonSymbol = "<eps>";
inline constexpr std::string_view kBlankSymbol = "<blk>";

/// Dense symbol <-> id mapping. Id 0 is always <eps> and id 1 is <blk>.
class SymbolTable {
 public:
  SymbolTable();

  /// Returns the id of `symbol`, adding it if absent.
  LabelId add(std::string_view symbol);
  std::optional<LabelId> find(std::string_view symbol) const;
  /// Throws Error(kOov) when absent.
  LabelId id(std::string_view symbol) const;
  const std::string &symbol(LabelId id) const { return symbols_.at(id); }
  int size() const { return static_cast<int>(symbols_.size()); }

  /// Lines of `symbol id`, ids dense from 0.
  static SymbolTable read(std::istream &in);
  void write(std::ostream &out) const;

  friend bool operator==(const SymbolTable &a, const SymbolTable &b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, LabelId> ids_;
};

}  // namespace lfmmi
