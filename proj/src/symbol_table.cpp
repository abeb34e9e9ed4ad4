#include "lfmmi/symbol_table.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "lfmmi/error.hpp"

namespace lfmmi {

SymbolTable::SymbolTable() {
  add(kEpsilonSymbol);
  add(kBlankSymbol);
}

LabelId SymbolTable::add(std::string_view symbol) {
  auto it = ids_.find(std::string(symbol));
  if (it != ids_.end()) return it->second;
  const LabelId id = size();
  symbols_.emplace_back(symbol);
  ids_.emplace(std::string(symbol), id);
  return id;
}

std::optional<LabelId> SymbolTable::find(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

LabelId SymbolTable::id(std::string_view symbol) const {
  if (auto found = find(symbol)) return *found;
  throw Error(ErrorCode::kOov, "unknown symbol '" + std::string(symbol) + "'");
}

SymbolTable SymbolTable::read(std::istream &in) {
  std::map<LabelId, std::string> by_id;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string symbol;
    LabelId id;
    if (!(fields >> symbol)) continue;
    if (!(fields >> id) || id < 0 || !by_id.emplace(id, symbol).second) {
      throw Error(ErrorCode::kParse,
                  "symbol table line " + std::to_string(lineno) + ": bad id");
    }
  }
  if (by_id.size() < 2) {
    throw Error(ErrorCode::kParse, "symbol table needs <eps> 0 and <blk> 1");
  }
  SymbolTable table;
  LabelId expected = 0;
  for (const auto &[id, symbol] : by_id) {
    if (id != expected++) {
      throw Error(ErrorCode::kParse, "symbol table ids must be dense");
    }
    if (id < 2) {
      if (table.symbol(id) != symbol) {
        throw Error(ErrorCode::kParse,
                    "symbol table must map <eps> to 0 and <blk> to 1");
      }
    } else if (table.add(symbol) != id) {
      throw Error(ErrorCode::kParse, "duplicate symbol '" + symbol + "'");
    }
  }
  return table;
}

void SymbolTable::write(std::ostream &out) const {
  for (LabelId i = 0; i < size(); ++i) out << symbols_[i] << ' ' << i << '\n';
}

}  // namespace lfmmi
