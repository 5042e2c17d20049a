#include "duet/embeddings.hpp"

#include "duet/corpus.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace duet {

EmbeddingTable::EmbeddingTable(EmbeddingKind kind, std::vector<std::string> symbols, Matrix<double> vectors)
    : kind_(kind), symbols_(std::move(symbols)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(symbols_.size()) != vectors_.rows()) {
    throw Error("embedding table: symbol count does not match vector rows");
  }
  if (vectors_.cols() <= 0) throw Error("embedding table: dim must be positive");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], i).second) throw Error("embedding table: duplicate symbol '" + symbols_[i] + "'");
  }
}

std::optional<std::size_t> EmbeddingTable::index(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Vector<double>> EmbeddingTable::lookup(const std::string& symbol) const {
  auto i = index(symbol);
  if (!i) return std::nullopt;
  return Vector<double>(row(*i).transpose());
}

std::optional<Vector<double>> mean_vector(const EmbeddingTable& table, const std::vector<std::string>& symbols) {
  if (table.size() == 0) return std::nullopt;
  Vector<double> sum = Vector<double>::Zero(table.dim());
  int n = 0;
  for (const auto& s : symbols) {
    if (auto i = table.index(s)) {
      sum += table.row(*i).transpose();
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return Vector<double>(sum / static_cast<double>(n));
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.symbols()[i];
    for (Eigen::Index j = 0; j < table.dim(); ++j) out << ' ' << format_double(table.vectors()(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
}

void write_embeddings(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write embedding file " + path);
  write_embeddings(out, table);
}

EmbeddingTable read_embeddings(std::istream& in, EmbeddingKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw Error("embedding file: missing header");
  std::istringstream header(line);
  long count = 0;
  long dim = 0;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) throw Error("embedding file: bad header '" + line + "'");
  std::vector<std::string> symbols;
  symbols.reserve(static_cast<std::size_t>(count));
  Matrix<double> vectors(count, dim);
  for (long r = 0; r < count; ++r) {
    if (!std::getline(in, line)) throw Error("embedding file: expected " + std::to_string(count) + " vectors");
    std::istringstream ss(line);
    std::string symbol;
    ss >> symbol;
    for (long c = 0; c < dim; ++c) {
      std::string tok;
      if (!(ss >> tok)) throw Error("embedding file line " + std::to_string(r + 2) + ": too few values");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error("embedding file line " + std::to_string(r + 2) + ": bad value '" + tok + "'");
      }
      vectors(r, c) = v;
    }
    std::string extra;
    if (ss >> extra) throw Error("embedding file line " + std::to_string(r + 2) + ": too many values");
    symbols.push_back(std::move(symbol));
  }
  return EmbeddingTable(kind, std::move(symbols), std::move(vectors));
}

EmbeddingTable load_embeddings(const std::string& path, EmbeddingKind kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path);
  try {
    return read_embeddings(in, kind);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace duet
