#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "urbanmas/domain.hpp"

namespace urbanmas {

struct ReliabilityConfig {
  double threshold = 0.72;
  double jaccard_weight = 0.4;
  double seq_weight = 0.6;
  int max_repair_rounds = 2;
};

/// Throws Error(Config) unless weights sum to 1 (within 1e-12), threshold is
/// in (0, 1] and max_repair_rounds >= 1.
void validate(const ReliabilityConfig& cfg);

/// Lowercases, removes punctuation (Unicode P* plus # $ + < = > | ~),
/// collapses whitespace runs to one space and trims. Input is UTF-8; invalid
/// sequences become U+FFFD. Idempotent.
std::string normalize(std::string_view text);

/// Token-set Jaccard over single-space tokens of already normalized text.
/// Two empty inputs score 1.
double jaccard(std::string_view a, std::string_view b);

/// Ratcliff/Obershelp gestalt ratio 2M / (|a| + |b|) over code points.
/// Operands are ordered lexicographically first, so the result is symmetric.
/// Two empty inputs score 1.
double seq_ratio(std::string_view a, std::string_view b);
double seq_ratio(std::u32string_view a, std::u32string_view b);

/// Hybrid similarity of two already normalized texts.
double soft_sim_normalized(std::string_view a, std::string_view b,
                           const ReliabilityConfig& cfg = {});
/// Hybrid similarity; normalizes both inputs first.
double soft_sim(std::string_view a, std::string_view b, const ReliabilityConfig& cfg = {});

/// Fields scoring strictly below `threshold`, in report order.
std::vector<std::string> gate(const std::vector<std::pair<std::string, double>>& per_field,
                              double threshold);

/// Field-by-field comparison of two variants. Throws Error(KeyMismatch) when
/// the records disagree on (location, task, dimension, level) or field keys.
SimilarityReport evaluate(const UrbanInfoRecord& variant_a, const UrbanInfoRecord& variant_b,
                          const ReliabilityConfig& cfg = {});

struct RefineRequest {
  std::string field;
  std::string value_a;
  std::string value_b;
  /// Text of the previous round: variant B's value in round 1, the last
  /// refined text afterwards.
  std::string previous;
  int round = 1;
};

using RefineFn = std::function<std::string(const RefineRequest&)>;

/// Accepts variant A when nothing conflicts; otherwise regenerates only the
/// conflicting fields, re-scoring each refined text against variant A, for
/// at most cfg.max_repair_rounds rounds. Fields still below threshold keep
/// their last refined text and mark the record low_confidence.
UrbanInfoRecord reconcile(const UrbanInfoRecord& variant_a, const UrbanInfoRecord& variant_b,
                          const SimilarityReport& report, const RefineFn& refine,
                          const ReliabilityConfig& cfg = {});

}  // namespace urbanmas
