#pragma once

// Stable markers shared by the prompt builders and the synthetic mock
// backend. Changing any of these changes every request fingerprint and
// invalidates recorded cassettes.

namespace urbanmas::prompts {

inline constexpr const char* kResearchRole = "Role: deep-research analyst for urban prediction.";
inline constexpr const char* kSummaryRole = "Role: predictive-factor summarizer.";
inline constexpr const char* kExtractRole = "Role: urban information extractor.";
inline constexpr const char* kRefineRole = "Role: urban information refiner.";
inline constexpr const char* kInferRole = "Role: multi-source urban inference agent.";
inline constexpr const char* kSingleLlmRole = "Role: urban prediction model.";

inline constexpr const char* kTaskPrefix = "Task: ";
inline constexpr const char* kDimensionPrefix = "Dimension: ";
inline constexpr const char* kLevelPrefix = "Level: ";
inline constexpr const char* kRequiredKeysPrefix = "Required keys: ";
inline constexpr const char* kOutputKeyPrefix = "Output key: ";
inline constexpr const char* kFieldPrefix = "Field: ";
inline constexpr const char* kVariantAPrefix = "Variant A: ";
inline constexpr const char* kVariantBPrefix = "Variant B: ";
inline constexpr const char* kRoundPrefix = "Repair round: ";
inline constexpr const char* kReportBegin = "--- report ---";
inline constexpr const char* kReportEnd = "--- end report ---";

}  // namespace urbanmas::prompts
