#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace facetforge {

using Vector = std::vector<double>;

// Word vectors keyed by lowercased word. Immutable once loaded.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension);

  // Keeps the first vector seen for a word. Throws InvalidArgument on a
  // dimension mismatch.
  bool add(std::string_view word, Vector v);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  const Vector* find(std::string_view word) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
};

// Text format: optional "count dim" header, then "word f1 ... fd" rows.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct PhraseVector {
  Vector vector;
  bool oov = false;  // no token of the phrase was in the vocabulary
};

// Mean of the vectors of the phrase's word tokens; a token missing from the
// table is retried in its plural-folded form.
PhraseVector phrase_vector(std::string_view phrase, const EmbeddingTable& table);

// dot(u,v)/(|u||v|), 0 when either norm is zero. Throws InvalidArgument when
// the dimensions differ.
double cosine(std::span<const double> u, std::span<const double> v);

}  // namespace facetforge
