#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace facetforge {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

enum class Linkage { single, complete, average };

std::string_view to_string(Linkage linkage);
std::optional<Linkage> parse_linkage(std::string_view name);

// Symmetric n x n matrix with a zero diagonal. Unset pairs are +inf, which
// HAC never merges across.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n);

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  // Sets both (i,j) and (j,i). Throws InvalidArgument for i == j, a
  // negative or NaN distance, or an index out of range.
  void set(std::size_t i, std::size_t j, double distance);

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// Each cluster lists item indices ascending; clusters are ordered by their
// smallest item.
using Partition = std::vector<std::vector<std::size_t>>;

// Agglomerative clustering. At every step the pair of clusters with the
// smallest linkage distance is merged, ties going to the pair whose
// (smallest-member, smallest-member) indices come first. Merging stops once
// that minimum exceeds `theta_cut` or is infinite.
Partition hac(const DistanceMatrix& distances, Linkage linkage, double theta_cut);

}  // namespace facetforge
