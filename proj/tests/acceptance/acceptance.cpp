// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "doubles.hpp"
#include "oracles.hpp"
#include "urbanmas/cli/app.hpp"
#include "urbanmas/dataset.hpp"
#include "urbanmas/evaluation.hpp"
#include "urbanmas/guidance.hpp"
#include "urbanmas/llm/cassette.hpp"
#include "urbanmas/llm/mock_backend.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/pipeline.hpp"
#include "urbanmas/prompts.hpp"
#include "urbanmas/reliability.hpp"
#include "urbanmas/serialization.hpp"

using namespace urbanmas;
namespace fs = std::filesystem;
using Seconds = std::chrono::duration<double>;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failed expectation of a criterion.
struct Check {
  Outcome& o;
  void operator()(bool cond, const std::string& what) {
    if (!cond && o.pass) {
      o.pass = false;
      o.detail = what;
    }
  }
};

double elapsed(std::chrono::steady_clock::time_point start) {
  return Seconds(std::chrono::steady_clock::now() - start).count();
}

std::string random_normalized(std::mt19937& rng) {
  static const char* words[] = {"quiet", "street", "park", "trees", "busy", "road", "a", "ab", "ba"};
  std::uniform_int_distribution<int> nwords(0, 6), pick(0, 8), coin(0, 2), len(1, 7), letter(0, 25);
  std::string out;
  for (int i = nwords(rng); i > 0; --i) {
    if (!out.empty()) out += ' ';
    if (coin(rng) == 0) {
      for (int k = len(rng); k > 0; --k) out += static_cast<char>('a' + letter(rng));
    } else {
      out += words[pick(rng)];
    }
  }
  return out;
}

std::vector<std::string> strings_over_abc(std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char c : {'a', 'b', 'c'}) out.push_back(out[i] + c);
    begin = end;
  }
  return out;
}

// 1. Hybrid similarity against the brute-force reference.
Outcome criterion_1() {
  Outcome o;
  Check check{o};
  const auto start = std::chrono::steady_clock::now();

  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_normalized(rng), b = random_normalized(rng);
    const double got = soft_sim(a, b), want = oracle::soft_sim(a, b);
    check(std::abs(got - want) <= 1e-9,
          fmt::format("random pair '{}' / '{}': {} vs {}", a, b, got, want));
  }

  const auto all = strings_over_abc(8);
  std::size_t pairs = 0;
  double worst = 0.0;
  for (const auto& s : all) check(normalize(s) == s, "normalize changed '" + s + "'");
  // Oracle token sets are built once per string; the pair loop dominates.
  std::vector<std::vector<std::string_view>> toks;
  toks.reserve(all.size());
  for (const auto& s : all) toks.push_back(oracle::tokens(s));
  // Unordered pairs (i <= j); the ordered complement is covered by symmetry.
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string_view a = all[i];
    for (std::size_t j = i; j < all.size(); ++j) {
      const std::string_view b = all[j];
      const double want = 0.4 * oracle::jaccard_of(toks[i], toks[j]) + 0.6 * oracle::gestalt_ratio(a, b);
      const double d = std::abs(soft_sim_normalized(a, b) - want);
      if (d > worst) worst = d;
      if (d > 1e-9) check(false, fmt::format("exhaustive pair '{}' / '{}' differs by {}", a, b, d));
      ++pairs;
    }
  }
  const double t = elapsed(start);
  check(t < 30.0, fmt::format("runtime {:.1f} s exceeds 30 s", t));
  if (o.pass)
    o.detail = fmt::format("200 random pairs; {} strings, {} unordered pairs, max |diff| {:.1e}; {:.1f} s",
                           all.size(), pairs, worst, t);
  return o;
}

// 2. Gestalt spot value and symmetry.
Outcome criterion_2() {
  Outcome o;
  Check check{o};
  check(seq_ratio("abcd", "bcde") == 0.75, "seq_ratio(abcd, bcde) != 0.75");
  std::mt19937 rng(99);
  const std::string pieces[] = {"a", "b", "c", " ", "é", "東", "ab", "ba"};
  std::uniform_int_distribution<int> len(0, 12), pick(0, 7);
  for (int i = 0; i < 1000; ++i) {
    std::string a, b;
    for (int k = len(rng); k > 0; --k) a += pieces[pick(rng)];
    for (int k = len(rng); k > 0; --k) b += pieces[pick(rng)];
    check(seq_ratio(a, b) == seq_ratio(b, a), "asymmetric for '" + a + "' / '" + b + "'");
  }
  if (o.pass) o.detail = "0.75 exactly; 1000 random pairs symmetric";
  return o;
}

// 3. Gate locality.
Outcome criterion_3() {
  Outcome o;
  Check check{o};
  const std::vector<std::string> base = {
      "dense street trees along both sidewalks", "steady pedestrian flow near the station exit",
      "bright lamps every twenty metres",        "moderate traffic noise during rush hour",
      "a small pocket park with benches",        "two bus lines and a metro stop within 300 m"};
  const std::vector<std::string> unrelated = {"zxq 4417", "vvvv kkkk", "9 9 9 9",
                                              "jjj yyy www", "qqqq", "xx zz xx zz"};
  auto record = [&](const std::vector<std::string>& texts) {
    UrbanInfoRecord r{"loc", "task", Dimension::Social, Level::Street, {}, RecordStatus::Raw};
    for (std::size_t i = 0; i < texts.size(); ++i)
      r.fields.push_back({"field" + std::to_string(i), {texts[i], Provenance::VariantA, std::nullopt, 0}});
    return r;
  };
  int cases = 0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    auto texts = base;
    std::vector<std::string> expected;
    for (unsigned i = 0; i < 6; ++i)
      if (mask >> i & 1) {
        texts[i] = unrelated[(i + mask) % 6];
        expected.push_back("field" + std::to_string(i));
      }
    const auto a = record(base), b = record(texts);
    const auto report = evaluate(a, b);
    check(report.threshold == 0.72, "threshold is not 0.72");
    check(report.conflicting == expected, fmt::format("mask {}: wrong conflicting set", mask));
    std::vector<std::string> round_one;
    reconcile(a, b, report, [&](const RefineRequest& r) {
      if (r.round == 1) round_one.push_back(r.field);
      return r.value_a;
    });
    check(round_one == expected, fmt::format("mask {}: round-one refiner calls differ", mask));
    ++cases;
  }
  if (o.pass) o.detail = fmt::format("{} corruption patterns, k = 0..6", cases);
  return o;
}

// 4. Factor layer contract.
Outcome criterion_4() {
  Outcome o;
  Check check{o};
  const TaskSpec task{"running_amount", "Amount of recreational running.", "running_amount"};
  auto five_then_six = std::make_shared<llm::MockBackend>(
      [](std::string_view s, std::string_view u, int seed) -> std::string {
        if (s.find(prompts::kSummaryRole) == std::string_view::npos)
          return llm::synthetic_response(s, u, seed);
        const int n = u.find("rejected") == std::string_view::npos ? 5 : 6;
        nlohmann::json arr = nlohmann::json::array();
        for (int i = 0; i < n; ++i)
          arr.push_back({{"name", "Factor " + std::to_string(i)}, {"description", "Measured thing."}});
        return nlohmann::json{{"factors", arr}}.dump();
      });
  int retries = 0;
  for (const auto& backend : {std::shared_ptr<llm::ChatBackend>(llm::MockBackend::synthetic()),
                              std::shared_ptr<llm::ChatBackend>(five_then_six)}) {
    const FactorGuide guide(backend);
    const auto result = guide.guide(task);
    check(result.factors.size() == 4, "guide did not return 4 sets");
    for (const auto key : all_factor_keys()) {
      const auto it = result.factors.find(key);
      check(it != result.factors.end(), "missing pair " + label(key));
      if (it == result.factors.end()) continue;
      check(it->second.factors.size() == 6, label(key) + " does not have 6 factors");
      check(validate_factor_set(it->second).ok(), label(key) + " has duplicate names");
    }
  }
  const ResearchReport report{task.id, Dimension::Social, Level::Macro, std::string(500, 'r')};
  retries = FactorGuide(five_then_six).summarize(task, report).retry_count;
  check(retries == 1, fmt::format("5-then-6 fixture retry_count {}", retries));
  if (o.pass) o.detail = "synthetic and 5-then-6 fixtures: 4 sets x 6 distinct; retry_count 1";
  return o;
}

// 5. Metrics.
Outcome criterion_5() {
  Outcome o;
  Check check{o};
  const std::vector<double> p{2, 4}, t{1, 2};
  const auto r = metrics(std::span<const double>(p), std::span<const double>(t));
  check(std::abs(r.mae - 1.5) <= 1e-12, "mae");
  check(std::abs(r.mse - 2.5) <= 1e-12, "mse");
  check(std::abs(r.rmse - std::sqrt(2.5)) <= 1e-12, "rmse");
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  std::uniform_int_distribution<int> len(1, 64);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(len(rng)), b(a.size());
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    const auto m = metrics(std::span<const double>(a), std::span<const double>(b));
    check(std::abs(m.rmse * m.rmse - m.mse) <= 1e-12, "rmse^2 != mse");
    check(m.mae <= m.rmse, "mae > rmse");
  }
  if (o.pass) o.detail = "example exact to 1e-12; 1000 random vectors";
  return o;
}

// 6. Rescale.
Outcome criterion_6() {
  Outcome o;
  Check check{o};
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> d(-500.0, 500.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(2 + i % 20);
    for (auto& x : v) x = d(rng);
    const auto out = rescale_to_unit_interval_times_ten(v);
    const auto lo = std::min_element(v.begin(), v.end()) - v.begin();
    const auto hi = std::max_element(v.begin(), v.end()) - v.begin();
    check(out[lo] == 0.0 && out[hi] == 10.0, "endpoints not 0 and 10");
  }
  const std::vector<double> same{3.3, 3.3, 3.3};
  for (double x : rescale_to_unit_interval_times_ten(same)) check(x == 5.0, "all-equal not 5");
  if (o.pass) o.detail = "min -> 0, max -> 10 on 200 vectors; all-equal -> 5.0";
  return o;
}

// Runs the CLI with a failing network and captures the backend counter.
struct CliRun {
  int code;
  std::string out;
  std::string err;
  std::shared_ptr<llm::CountingBackend> backend;
};

CliRun run_cli(std::vector<std::string> args, std::shared_ptr<HttpTransport> transport) {
  std::ostringstream out, err;
  cli::Services s;
  s.transport = std::move(transport);
  s.out = &out;
  s.err = &err;
  const int code = cli::run_cli(args, s);
  return {code, out.str(), err.str(), s.backend};
}

std::vector<std::string> base_args(const std::string& cmd, const fs::path& fixtures,
                                   const fs::path& out) {
  return {cmd, "--config", (fixtures / "run_config.json").string(), "--out", out.string(), "-q"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string slurp_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) out += fs::relative(f, root).generic_string() + "\n" + slurp(f);
  return out;
}

// Prepares enriched data and factor caches under `out`.
bool prepare(const fs::path& fixtures, const fs::path& out,
             const std::shared_ptr<HttpTransport>& net, std::string& why) {
  for (const char* cmd : {"ingest", "factors"}) {
    auto r = run_cli(base_args(cmd, fixtures, out), net);
    if (r.code != 0) {
      why = std::string(cmd) + " failed: " + r.err;
      return false;
    }
  }
  return true;
}

// 7. End-to-end determinism.
Outcome criterion_7() {
  Outcome o;
  Check check{o};
  testing::TempDir dir;
  const auto fixtures = dir / "fixtures";
  testing::copy_fixtures(fixtures);
  auto net = std::make_shared<testing::FailingTransport>();

  std::string reference;
  double slowest = 0.0;
  int runs = 0;
  const std::vector<std::string> widths{"4", "4", "4", "4", "4", "1", "1"};
  for (const auto& w : widths) {
    const auto out = dir / ("run" + std::to_string(runs));
    const auto start = std::chrono::steady_clock::now();
    std::string why;
    if (!prepare(fixtures, out, net, why)) {
      check(false, why);
      break;
    }
    auto args = base_args("predict", fixtures, out);
    args.insert(args.end(), {"--workers", w});
    const auto r = run_cli(args, net);
    const double t = elapsed(start);
    slowest = std::max(slowest, t);
    check(r.code == 0, "predict failed: " + r.err + r.out);
    const auto snapshot = slurp(out / "predictions.jsonl") + slurp_tree(out / "audit");
    if (reference.empty())
      reference = snapshot;
    else
      check(snapshot == reference, fmt::format("run {} (workers {}) differs", runs, w));
    ++runs;
  }
  check(net->attempts == 0, "network was touched");
  check(slowest < 10.0, fmt::format("slowest run {:.2f} s exceeds 10 s", slowest));
  if (o.pass)
    o.detail = fmt::format("{} runs (5 at width 4, 2 at width 1) byte-identical; slowest {:.2f} s",
                           runs, slowest);
  return o;
}

// 8. Ablation accounting per location on the replay fixture.
Outcome criterion_8() {
  Outcome o;
  Check check{o};
  testing::TempDir dir;
  const auto fixtures = dir / "fixtures";
  testing::copy_fixtures(fixtures);
  const auto out = dir / "run";
  std::string why;
  if (!prepare(fixtures, out, std::make_shared<testing::FailingTransport>(), why)) {
    check(false, why);
    return o;
  }
  const auto samples = load_dataset(out / "enriched.jsonl");
  const TaskSpec task{"running_amount", "", "running_amount"};
  const auto cache = load_factor_cache(factor_cache_path(out / "factors", task.id));
  const auto cassette = std::make_shared<llm::Cassette>(fixtures / "cassette.jsonl");
  // The task spec used for recording comes from the built-in catalogue.
  const auto doc = nlohmann::json::parse(slurp(factor_cache_path(out / "factors", task.id)));
  const auto recorded_task = doc.at("task").get<TaskSpec>();

  std::size_t repairs_total = 0;
  for (const auto& sample : samples) {
    for (const auto v : all_variants()) {
      auto counting = std::make_shared<llm::CountingBackend>(std::make_shared<llm::ReplayBackend>(cassette));
      PipelineConfig cfg;
      cfg.workers = 1;
      cfg.extraction.concurrent = false;
      const Pipeline pipeline(counting, cfg);
      PredictionOutcome outcome;
      try {
        outcome = pipeline.predict(sample, recorded_task, v, &cache.factors);
      } catch (const std::exception& e) {
        check(false, fmt::format("{} {}: {}", sample.id, to_string(v), e.what()));
        continue;
      }
      std::size_t repairs = 0, reasks = 0;
      for (const auto& [k, t] : outcome.transcripts) {
        repairs += static_cast<std::size_t>(t.refine_calls);
        reasks += static_cast<std::size_t>(t.reasks);
      }
      const auto total = counting->total();
      const auto where = fmt::format("{} {}", sample.id, to_string(v));
      switch (v) {
        case Variant::Full:
          repairs_total += repairs;
          check(counting->count(llm::agents::kExtract) + counting->count(llm::agents::kRefine) ==
                    8 + repairs + reasks,
                where + ": extraction calls");
          check(counting->count(llm::agents::kInfer) == 1, where + ": inference calls");
          check(total == 8 + repairs + reasks + 1, where + fmt::format(": total {}", total));
          check(reasks == 0, where + ": unexpected re-asks in the fixture");
          break;
        case Variant::NoReliability:
          check(total == 5, where + fmt::format(": total {} != 5", total));
          break;
        case Variant::SingleLlm:
          check(total == 1, where + fmt::format(": total {} != 1", total));
          break;
        case Variant::NoFactors:
          check(total == 8 + repairs + reasks + 1, where + ": total");
          break;
      }
    }
  }
  if (o.pass)
    o.detail = fmt::format("{} locations; full = 4*2 + repairs ({} over all) + 1; no_reliability 5; single_llm 1",
                           samples.size(), repairs_total);
  return o;
}

// 9. Report formatting.
Outcome criterion_9() {
  Outcome o;
  Check check{o};
  // Unrounded fixture metrics displayed as 13.20 and 13.39.
  const std::vector<EvalReport> reports{
      {"running_amount", Variant::Full, 3, 2.9, 13.196, std::sqrt(13.196)},
      {"running_amount", Variant::NoReliability, 3, 2.95, 13.389, std::sqrt(13.389)}};
  const auto table = render_report_table(reports);
  check(table.find("13.20") != std::string::npos, "reference row lacks 13.20");
  check(table.find("13.39 (↑1.46%)") != std::string::npos, "ablation row lacks 13.39 (↑1.46%)");
  if (o.pass) o.detail = "full 13.20, no_reliability \"13.39 (↑1.46%)\"";
  return o;
}

// 10. Offline guarantee.
Outcome criterion_10() {
  Outcome o;
  Check check{o};
  testing::TempDir dir;
  const auto fixtures = dir / "fixtures";
  testing::copy_fixtures(fixtures);
  auto net = std::make_shared<testing::FailingTransport>();
  const auto out = dir / "run";
  for (const char* cmd : {"ingest", "factors", "predict"}) {
    auto args = base_args(cmd, fixtures, out);
    args.emplace_back("--offline");
    const auto r = run_cli(args, net);
    check(r.code == 0, std::string(cmd) + " failed: " + r.err);
  }
  check(fs::exists(out / "predictions.jsonl"), "no predictions written");
  check(net->attempts == 0, fmt::format("{} network attempts", net->attempts.load()));
  if (o.pass) o.detail = "ingest, factors, predict completed; 0 network attempts";
  return o;
}

}  // namespace

int main() {
  log::set_min_level(log::Level::Error);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"similarity oracle equivalence", criterion_1},
      {"gestalt spot value and symmetry", criterion_2},
      {"gate locality", criterion_3},
      {"factor-layer contract", criterion_4},
      {"metric correctness", criterion_5},
      {"rescale endpoints", criterion_6},
      {"end-to-end determinism", criterion_7},
      {"ablation accounting", criterion_8},
      {"report formatting", criterion_9},
      {"offline guarantee", criterion_10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} criterion {:>2} ({}): {}\n", o.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, o.detail)
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
