#include "urbanmas/reliability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "urbanmas/error.hpp"

namespace urbanmas {

void validate(const ReliabilityConfig& cfg) {
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0))
    throw Error(ErrorCode::Config, "reliability threshold must lie in (0, 1]");
  if (!(cfg.jaccard_weight >= 0.0 && cfg.seq_weight >= 0.0) ||
      std::abs(cfg.jaccard_weight + cfg.seq_weight - 1.0) > 1e-12)
    throw Error(ErrorCode::Config, "jaccard_weight + seq_weight must equal 1");
  if (cfg.max_repair_rounds < 1) throw Error(ErrorCode::Config, "max_repair_rounds must be >= 1");
}

namespace {

bool is_removed_symbol(UChar32 c) {
  switch (c) {
    case '#': case '$': case '+': case '<': case '=': case '>': case '|': case '~':
      return true;
    default:
      return (U_GET_GC_MASK(c) & U_GC_P_MASK) != 0;
  }
}

void append_utf8(std::string& out, UChar32 c) {
  std::uint8_t buf[U8_MAX_LENGTH];
  std::int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

// Sorted unique tokens of a normalized string, written into `out`.
void token_set(std::string_view s, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto end = s.find(' ', pos);
    if (end == std::string_view::npos) end = s.size();
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  if (out.size() > 1) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
}

struct Match {
  std::size_t a;
  std::size_t b;
  std::size_t size;
};

// Scratch space reused across calls on the same thread; the similarity
// functions run in hot loops and must not allocate per call.
struct Scratch {
  std::vector<std::uint8_t> run8;
  std::vector<std::uint32_t> run32;
  std::vector<std::array<std::uint32_t, 4>> stack;
  std::u32string ua;
  std::u32string ub;
  std::vector<std::string_view> ta;
  std::vector<std::string_view> tb;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

// Longest block inside [alo, ahi) x [blo, bhi); ties go to the earliest
// start in a, then in b. `run` holds common-run lengths ending at each cell,
// clipped here to the block, which equals what a per-block table would hold.
template <class R>
Match best_in_block(const R* run, std::size_t stride, std::size_t alo, std::size_t ahi,
                    std::size_t blo, std::size_t bhi) {
  Match best{alo, blo, 0};
  for (std::size_t i = alo; i < ahi; ++i) {
    const R* row = run + (i + 1) * stride + 1;
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = row[j];
      if (k <= best.size) continue;
      k = std::min({k, i - alo + 1, j - blo + 1});
      if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
    }
  }
  return best;
}

// R must hold min(|a|, |b|), the longest possible run.
template <class R, class C>
std::size_t matched_characters(std::basic_string_view<C> a, std::basic_string_view<C> b,
                               std::vector<R>& table, Scratch& s) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t stride = m + 1;
  table.resize((n + 1) * stride);
  R* run = table.data();
  std::fill(run, run + stride, R{0});
  const C* pb = b.data();

  // Table fill; the whole-block search rides along one row at a time. Within
  // a row the first column holding the row maximum is the strict-'>' winner.
  Match best{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const R* __restrict up = run + i * stride;
    R* __restrict row = run + (i + 1) * stride;
    const C ca = a[i];
    row[0] = 0;
    R row_max = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const R k = ca == pb[j] ? static_cast<R>(up[j] + 1) : R{0};
      row[j + 1] = k;
      row_max = k > row_max ? k : row_max;
    }
    if (row_max > best.size) {
      std::size_t j = 0;
      while (row[j + 1] != row_max) ++j;
      best = {i + 1 - row_max, j + 1 - row_max, row_max};
    }
  }
  if (best.size == 0) return 0;

  std::size_t total = best.size;
  auto& stack = s.stack;
  stack.clear();
  auto push = [&](std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) {
    if (alo < ahi && blo < bhi)
      stack.push_back({static_cast<std::uint32_t>(alo), static_cast<std::uint32_t>(ahi),
                       static_cast<std::uint32_t>(blo), static_cast<std::uint32_t>(bhi)});
  };
  push(0, best.a, 0, best.b);
  push(best.a + best.size, n, best.b + best.size, m);
  while (!stack.empty()) {
    const auto [alo, ahi, blo, bhi] = stack.back();
    stack.pop_back();
    const auto mb = best_in_block(run, stride, alo, ahi, blo, bhi);
    if (mb.size == 0) continue;
    total += mb.size;
    push(alo, mb.a, blo, mb.b);
    push(mb.a + mb.size, ahi, mb.b + mb.size, bhi);
  }
  return total;
}

template <class C>
std::size_t matched_characters(std::basic_string_view<C> a, std::basic_string_view<C> b,
                               Scratch& s) {
  if (std::min(a.size(), b.size()) < 255) return matched_characters(a, b, s.run8, s);
  return matched_characters(a, b, s.run32, s);
}

template <class C>
double ratio(std::basic_string_view<C> a, std::basic_string_view<C> b, Scratch& s) {
  if (a.empty() && b.empty()) return 1.0;
  if (b < a) std::swap(a, b);
  const auto m = matched_characters(a, b, s);
  return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

void decode_utf8_into(std::string_view s, std::u32string& out) {
  out.clear();
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto len = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    out.push_back(static_cast<char32_t>(c < 0 ? 0xFFFD : c));
  }
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto len = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  bool pending_space = false;
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    if (c < 0) c = 0xFFFD;
    if (u_isUWhiteSpace(c)) {
      pending_space = true;
      continue;
    }
    if (is_removed_symbol(c)) continue;
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    append_utf8(out, u_tolower(c));
  }
  return out;
}

double jaccard(std::string_view a, std::string_view b) {
  // Common case of single-token (or empty) inputs needs no token sets.
  if (a.find(' ') == std::string_view::npos && b.find(' ') == std::string_view::npos) {
    if (a.empty() || b.empty()) return a.empty() && b.empty() ? 1.0 : 0.0;
    return a == b ? 1.0 : 0.0;
  }
  auto& s = scratch();
  token_set(a, s.ta);
  token_set(b, s.tb);
  const auto& ta = s.ta;
  const auto& tb = s.tb;
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = ta.begin();
  auto ib = tb.begin();
  while (ia != ta.end() && ib != tb.end()) {
    if (*ia == *ib) {
      ++common;
      ++ia;
      ++ib;
    } else if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const auto uni = ta.size() + tb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double seq_ratio(std::u32string_view a, std::u32string_view b) {
  return ratio(a, b, scratch());
}

double seq_ratio(std::string_view a, std::string_view b) {
  auto& s = scratch();
  // In ASCII bytes are code points, so the bytes can be matched directly.
  if (is_ascii(a) && is_ascii(b)) return ratio(a, b, s);
  decode_utf8_into(a, s.ua);
  decode_utf8_into(b, s.ub);
  return ratio(std::u32string_view(s.ua), std::u32string_view(s.ub), s);
}

double soft_sim_normalized(std::string_view a, std::string_view b, const ReliabilityConfig& cfg) {
  return cfg.jaccard_weight * jaccard(a, b) + cfg.seq_weight * seq_ratio(a, b);
}

double soft_sim(std::string_view a, std::string_view b, const ReliabilityConfig& cfg) {
  return soft_sim_normalized(normalize(a), normalize(b), cfg);
}

std::vector<std::string> gate(const std::vector<std::pair<std::string, double>>& per_field,
                              double threshold) {
  std::vector<std::string> out;
  for (const auto& [name, score] : per_field)
    if (score < threshold) out.push_back(name);
  return out;
}

SimilarityReport evaluate(const UrbanInfoRecord& variant_a, const UrbanInfoRecord& variant_b,
                          const ReliabilityConfig& cfg) {
  if (variant_a.location_id != variant_b.location_id || variant_a.task_id != variant_b.task_id ||
      variant_a.key() != variant_b.key())
    throw Error(ErrorCode::KeyMismatch, "variants describe different (location, task, pair)");
  if (variant_a.keys() != variant_b.keys())
    throw Error(ErrorCode::KeyMismatch,
                "variants of " + label(variant_a.key()) + " have different field keys");

  SimilarityReport report;
  report.threshold = cfg.threshold;
  double sum = 0.0;
  for (std::size_t i = 0; i < variant_a.fields.size(); ++i) {
    const auto& fa = variant_a.fields[i];
    const double s = soft_sim(fa.value.text, variant_b.fields[i].value.text, cfg);
    report.per_field.emplace_back(fa.name, s);
    sum += s;
  }
  report.aggregate =
      report.per_field.empty() ? 1.0 : sum / static_cast<double>(report.per_field.size());
  report.conflicting = gate(report.per_field, cfg.threshold);
  return report;
}

UrbanInfoRecord reconcile(const UrbanInfoRecord& variant_a, const UrbanInfoRecord& variant_b,
                          const SimilarityReport& report, const RefineFn& refine,
                          const ReliabilityConfig& cfg) {
  if (variant_a.keys() != variant_b.keys())
    throw Error(ErrorCode::KeyMismatch, "reconcile: variants have different field keys");
  std::vector<std::string> report_keys;
  for (const auto& [name, score] : report.per_field) report_keys.push_back(name);
  if (report_keys != variant_a.keys())
    throw Error(ErrorCode::KeyMismatch, "reconcile: report does not match the variants");

  UrbanInfoRecord out = variant_a;
  for (auto& f : out.fields) {
    f.value.provenance = Provenance::VariantA;
    f.value.similarity = report.score(f.name);
    f.value.repair_rounds = 0;
  }
  if (report.conflicting.empty()) {
    out.status = RecordStatus::Stable;
    return out;
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < out.fields.size(); ++i)
    if (report.is_conflicting(out.fields[i].name)) pending.push_back(i);

  for (int round = 1; round <= cfg.max_repair_rounds && !pending.empty(); ++round) {
    std::vector<std::size_t> still;
    for (const auto i : pending) {
      auto& field = out.fields[i];
      RefineRequest req{field.name, variant_a.fields[i].value.text, variant_b.fields[i].value.text,
                        round == 1 ? variant_b.fields[i].value.text : field.value.text, round};
      std::string text;
      try {
        text = refine(req);
      } catch (const Error& e) {
        throw Error(e.code(), "refining field '" + field.name + "': " + e.what());
      } catch (const std::exception& e) {
        throw Error(ErrorCode::RefineFailure, "refining field '" + field.name + "': " + e.what());
      }
      if (text.empty())
        throw Error(ErrorCode::RefineFailure,
                    "refining field '" + field.name + "' produced empty text");
      const double score = soft_sim(text, req.value_a, cfg);
      field.value = FieldValue{std::move(text), Provenance::Refined, score, round};
      if (score < cfg.threshold) still.push_back(i);
    }
    pending = std::move(still);
  }
  out.status = pending.empty() ? RecordStatus::Refined : RecordStatus::LowConfidence;
  return out;
}

}  // namespace urbanmas
