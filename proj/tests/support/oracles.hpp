#pragma once

// Reference implementations written independently of the library, used as
// test oracles. They favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

// Longest common substring by trying every (i, j) start and extending.
// Strict '>' keeps the earliest start in a, then in b.
template <class C>
std::size_t gestalt_matches(std::basic_string_view<C> a, std::basic_string_view<C> b) {
  if (a.empty() || b.empty()) return 0;
  std::size_t best_i = 0, best_j = 0, best_k = 0;
  // Starts too close to an end to beat the current best are skipped.
  for (std::size_t i = 0; i + best_k < a.size(); ++i) {
    for (std::size_t j = 0; j + best_k < b.size(); ++j) {
      std::size_t k = 0;
      while (i + k < a.size() && j + k < b.size() && a[i + k] == b[j + k]) ++k;
      if (k > best_k) {
        best_i = i;
        best_j = j;
        best_k = k;
      }
    }
  }
  if (best_k == 0) return 0;
  return best_k + gestalt_matches(a.substr(0, best_i), b.substr(0, best_j)) +
         gestalt_matches(a.substr(best_i + best_k), b.substr(best_j + best_k));
}

// Ratcliff/Obershelp ratio; the lexicographically smaller operand goes first.
template <class C>
double gestalt_ratio(std::basic_string_view<C> a, std::basic_string_view<C> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (b < a) std::swap(a, b);
  return 2.0 * static_cast<double>(gestalt_matches(a, b)) /
         static_cast<double>(a.size() + b.size());
}

inline double gestalt_ratio(std::string_view a, std::string_view b) {
  return gestalt_ratio<char>(a, b);
}

// Distinct space-separated tokens, sorted.
inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ' ') {
      if (i > start) out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Jaccard over token sets already produced by tokens().
inline double jaccard_of(const std::vector<std::string_view>& ta,
                         const std::vector<std::string_view>& tb) {
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : ta) inter += std::binary_search(tb.begin(), tb.end(), t);
  return static_cast<double>(inter) / static_cast<double>(ta.size() + tb.size() - inter);
}

inline double jaccard(std::string_view a, std::string_view b) {
  return jaccard_of(tokens(a), tokens(b));
}

// Hybrid score for already normalized ASCII strings.
inline double soft_sim(std::string_view a, std::string_view b) {
  return 0.4 * jaccard(a, b) + 0.6 * gestalt_ratio(a, b);
}

struct Metrics {
  double mae;
  double mse;
  double rmse;
};

inline Metrics metrics(const std::vector<double>& p, const std::vector<double>& t) {
  long double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double e = static_cast<long double>(p[i]) - t[i];
    abs_sum += e < 0 ? -e : e;
    sq_sum += e * e;
  }
  const long double n = static_cast<long double>(p.size());
  return {static_cast<double>(abs_sum / n), static_cast<double>(sq_sum / n),
          static_cast<double>(std::sqrt(sq_sum / n))};
}

// Spherical law of cosines on the mean Earth radius; an alternative
// formulation to the haversine used by the library.
inline double great_circle_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kPi = 3.14159265358979323846;
  const double r = 6371008.8;
  const double p1 = lat1 * kPi / 180, p2 = lat2 * kPi / 180;
  const double dl = (lon2 - lon1) * kPi / 180;
  double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = c > 1 ? 1 : (c < -1 ? -1 : c);
  return r * std::acos(c);
}

}  // namespace oracle
