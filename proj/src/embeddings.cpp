#include "facetforge/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "facetforge/error.hpp"
#include "facetforge/text.hpp"

namespace facetforge {

namespace {

bool parse_double(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(const std::string& s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

bool EmbeddingTable::add(std::string_view word, Vector v) {
  if (dimension_ == 0) {
    if (v.empty()) throw InvalidArgument("embedding dimension must be positive");
    dimension_ = v.size();
  }
  if (v.size() != dimension_) {
    throw InvalidArgument("vector for '" + std::string(word) + "' has dimension " +
                          std::to_string(v.size()) + ", expected " +
                          std::to_string(dimension_));
  }
  return vectors_.emplace(to_lower(word), std::move(v)).second;
}

const Vector* EmbeddingTable::find(std::string_view word) const {
  auto it = vectors_.find(std::string(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::size_t expected_dim = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0;
      std::size_t dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim)) {
        if (dim == 0) throw ParseError("header dimension must be positive", line_no);
        expected_dim = dim;
        continue;
      }
    }
    if (fields.size() < 2) throw ParseError("row has no vector components", line_no);
    const std::size_t dim = fields.size() - 1;
    if (expected_dim == 0) expected_dim = dim;
    if (dim != expected_dim) {
      throw ParseError("row has " + std::to_string(dim) + " components, expected " +
                           std::to_string(expected_dim),
                       line_no);
    }
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], v[i])) {
        throw ParseError("bad number '" + fields[i + 1] + "'", line_no);
      }
    }
    table.add(fields[0], std::move(v));
  }
  if (table.size() == 0) throw Error("no vectors");
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings " + path.string());
  return load_embeddings(in);
}

PhraseVector phrase_vector(std::string_view phrase, const EmbeddingTable& table) {
  PhraseVector out;
  out.vector.assign(table.dimension(), 0.0);
  std::size_t hits = 0;
  for (const auto& tok : word_tokens(phrase)) {
    const Vector* v = table.find(tok);
    if (v == nullptr) v = table.find(fold_plural(tok));
    if (v == nullptr) continue;
    for (std::size_t i = 0; i < v->size(); ++i) out.vector[i] += (*v)[i];
    ++hits;
  }
  if (hits == 0) {
    out.oov = true;
    return out;
  }
  for (double& x : out.vector) x /= static_cast<double>(hits);
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine of vectors with dimensions " + std::to_string(u.size()) +
                          " and " + std::to_string(v.size()));
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace facetforge
