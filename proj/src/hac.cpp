#include "facetforge/hac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facetforge/error.hpp"

namespace facetforge {

namespace {

// Connected components over finite-distance edges. Clusters can never span
// two components: every linkage across them is infinite.
std::vector<std::vector<std::size_t>> finite_components(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::isfinite(d.at(i, j))) {
        std::size_t a = find(i);
        std::size_t b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& g : groups) {
    if (!g.empty()) out.push_back(std::move(g));
  }
  return out;
}

// Clusters the items of one component. Slot i holds the cluster whose
// smallest member is items[i]; for average linkage `link` stores the sum of
// member distances so the mean is recomputed exactly at comparison time.
Partition cluster_component(const DistanceMatrix& d, const std::vector<std::size_t>& items,
                            Linkage linkage, double theta_cut) {
  const std::size_t m = items.size();
  std::vector<double> link(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) link[i * m + j] = d.at(items[i], items[j]);
  }
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < m; ++i) members[i] = {items[i]};
  std::vector<bool> alive(m, true);

  auto value = [&](std::size_t i, std::size_t j) {
    double v = link[i * m + j];
    if (linkage == Linkage::average) {
      v /= static_cast<double>(members[i].size() * members[j].size());
    }
    return v;
  };

  while (true) {
    double best = kInfiniteDistance;
    std::size_t bi = m;
    std::size_t bj = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < m; ++j) {
        if (!alive[j]) continue;
        double v = value(i, j);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == m || !std::isfinite(best) || best > theta_cut) break;

    for (std::size_t k = 0; k < m; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      double a = link[bi * m + k];
      double b = link[bj * m + k];
      double merged = 0.0;
      switch (linkage) {
        case Linkage::single: merged = std::min(a, b); break;
        case Linkage::complete: merged = std::max(a, b); break;
        case Linkage::average: merged = a + b; break;
      }
      link[bi * m + k] = link[k * m + bi] = merged;
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members[bj].clear();
    alive[bj] = false;
  }

  Partition out;
  for (std::size_t i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    std::sort(members[i].begin(), members[i].end());
    out.push_back(std::move(members[i]));
  }
  return out;
}

}  // namespace

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "average";
}

std::optional<Linkage> parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  return std::nullopt;
}

DistanceMatrix::DistanceMatrix(std::size_t n) : n_(n), d_(n * n, kInfiniteDistance) {
  for (std::size_t i = 0; i < n; ++i) d_[i * n + i] = 0.0;
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double distance) {
  if (i >= n_ || j >= n_) throw InvalidArgument("distance index out of range");
  if (i == j) throw InvalidArgument("diagonal distances are fixed at zero");
  if (std::isnan(distance) || distance < 0.0) {
    throw InvalidArgument("distance must be non-negative");
  }
  d_[i * n_ + j] = distance;
  d_[j * n_ + i] = distance;
}

Partition hac(const DistanceMatrix& distances, Linkage linkage, double theta_cut) {
  Partition out;
  for (const auto& component : finite_components(distances)) {
    if (component.size() == 1) {
      out.push_back(component);
      continue;
    }
    auto part = cluster_component(distances, component, linkage, theta_cut);
    out.insert(out.end(), part.begin(), part.end());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

}  // namespace facetforge
