#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "doubles.hpp"
#include "oracles.hpp"
#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/evaluation.hpp"

using namespace urbanmas;

namespace {

std::vector<double> rescale(std::vector<double> v) { return rescale_to_unit_interval_times_ten(v); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("rescale examples") {
  CHECK(rescale({0, 255}) == std::vector<double>{0, 10});
  CHECK(rescale({5, 5, 5}) == std::vector<double>{5, 5, 5});
  CHECK(rescale({2, 4, 6}) == std::vector<double>{0, 5, 10});
  CHECK(code_of([] { rescale({}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { rescale({1, std::nan("")}); }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("rescale endpoints on random input") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  std::uniform_int_distribution<int> len(2, 40);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(len(rng));
    for (auto& x : v) x = d(rng);
    const auto out = rescale(v);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(out[lo - v.begin()] == 0.0);
    CHECK(out[hi - v.begin()] == 10.0);
    for (double x : out) CHECK((x >= 0.0 && x <= 10.0));
  }
}

TEST_CASE("metrics examples") {
  const std::vector<double> p{2, 4}, t{1, 2};
  const auto r = metrics(std::span<const double>(p), std::span<const double>(t));
  CHECK(std::abs(r.mae - 1.5) <= 1e-12);
  CHECK(std::abs(r.mse - 2.5) <= 1e-12);
  CHECK(std::abs(r.rmse - std::sqrt(2.5)) <= 1e-12);
  CHECK(r.n == 2);

  const auto zero = metrics(std::span<const double>(p), std::span<const double>(p));
  CHECK(zero.mae == 0.0);
  CHECK(zero.rmse == 0.0);
}

TEST_CASE("metrics agree with the oracle and satisfy the invariants") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  std::uniform_int_distribution<int> len(1, 50);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(len(rng)), t(p.size());
    for (auto& x : p) x = d(rng);
    for (auto& x : t) x = d(rng);
    const auto r = metrics(std::span<const double>(p), std::span<const double>(t));
    const auto o = oracle::metrics(p, t);
    CHECK(std::abs(r.mae - o.mae) <= 1e-12);
    CHECK(std::abs(r.mse - o.mse) <= 1e-12);
    CHECK(std::abs(r.rmse * r.rmse - r.mse) <= 1e-12);
    CHECK(r.mae <= r.rmse + 1e-15);
  }
}

TEST_CASE("labeled metrics align by id") {
  const std::vector<LabeledValue> p{{"b", 4}, {"a", 2}}, t{{"a", 1}, {"b", 2}};
  const auto r = metrics(p, t, "task", Variant::NoFactors);
  CHECK(r.mae == 1.5);
  CHECK(r.task_id == "task");
  CHECK(r.variant == Variant::NoFactors);

  try {
    metrics({{"a", 1}, {"c", 2}}, {{"a", 1}, {"b", 2}});
    FAIL("expected AlignmentFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlignmentFailure);
    CHECK(std::string(e.what()).find("b, c") != std::string::npos);
  }
  CHECK(code_of([] { metrics({{"a", 1}, {"a", 2}}, {{"a", 1}}); }) == ErrorCode::AlignmentFailure);
  CHECK(code_of([] { metrics(std::vector<LabeledValue>{}, {}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("relative change formatting") {
  // Unrounded metrics behind a displayed 13.20 -> 13.39 row.
  CHECK(format_change(13.389, 13.196) == "↑1.46%");
  // The rounded display values alone give a different second decimal.
  CHECK(format_change(13.39, 13.20) == "↑1.44%");
  CHECK(format_change(13.389, 13.196, ChangeStyle::Signed) == "+1.46%");
  CHECK(format_change(9.0, 10.0) == "↓10.00%");
  CHECK(format_change(9.0, 10.0, ChangeStyle::Signed) == "-10.00%");
  CHECK(format_change(10.0, 10.0) == "0.00%");
  CHECK(format_change(10.00001, 10.0) == "0.00%");
  CHECK(format_change(1.0, 0.0) == "n/a");
  CHECK(format_change(0.0, 0.0) == "0.00%");
  CHECK(std::isnan(relative_change_pct(1.0, 0.0)));
}

TEST_CASE("table rendering follows the ablation convention") {
  const std::vector<EvalReport> reports{
      {"running_amount", Variant::NoReliability, 3, 3.0, 13.389, std::sqrt(13.389)},
      {"running_amount", Variant::Full, 3, 3.0, 13.196, std::sqrt(13.196)},
  };
  const auto table = render_report_table(reports);
  CHECK(table.find("Task: running_amount") != std::string::npos);
  CHECK(table.find("13.39 (↑1.46%)") != std::string::npos);
  CHECK(table.find("Full pipeline") < table.find("- ReliabilityBoost"));
  CHECK(table.find("n=3") != std::string::npos);

  const auto csv = render_report_csv(reports);
  CHECK(csv.rfind("task_id,variant,n,mae,mse,rmse,mae_change,mse_change,rmse_change\n", 0) == 0);
  CHECK(csv.find("no_reliability") != std::string::npos);
  CHECK(csv.find("+1.46%") != std::string::npos);
}

TEST_CASE("table columns line up despite multi-byte arrows") {
  const std::vector<EvalReport> reports{
      {"t", Variant::Full, 3, 1.0, 2.0, 3.0},
      {"t", Variant::SingleLlm, 3, 1.5, 2.5, 3.5},
  };
  const auto table = render_report_table(reports);
  // "MSE" header and the MSE cell of every row start in the same display column.
  CHECK(table.find("Method Variant        MAE                 MSE") != std::string::npos);
  CHECK(table.find("Single LLM            1.50 (↑50.00%)      2.50 (↑25.00%)      3.50") !=
        std::string::npos);
}

TEST_CASE("ground truth loading and rescaling") {
  const auto rows = load_ground_truth(testing::fixtures() / "ground_truth.csv");
  REQUIRE(rows.size() == 3);
  const auto by_task = ground_truth_by_task(rows, true);
  const auto& t = by_task.at("running_amount");
  CHECK(t.at("milan-duomo") == 0.0);
  CHECK(t.at("seattle-greenlake") == 10.0);
  CHECK(t.at("tokyo-shiba") == doctest::Approx(10.0 * (142 - 61) / (218.0 - 61)).epsilon(1e-14));

  CHECK(code_of([&] { ground_truth_by_task(rows, false); }) == ErrorCode::InvalidArgument);
  auto dup = rows;
  dup.push_back(rows[0]);
  CHECK(code_of([&] { ground_truth_by_task(dup, true); }) == ErrorCode::AlignmentFailure);

  testing::TempDir dir;
  write_text_file(dir / "quoted.csv",
                  "task_id,raw_value,location_id\n\"t\",\"1.5\",\"a, b\"\n\nt,2,c\n");
  const auto quoted = load_ground_truth(dir / "quoted.csv");
  REQUIRE(quoted.size() == 2);
  CHECK(quoted[0].location_id == "a, b");
  CHECK(quoted[0].raw_value == 1.5);
  write_text_file(dir / "bad.csv", "location_id,task_id,raw_value\na,t,abc\n");
  CHECK_THROWS_WITH(load_ground_truth(dir / "bad.csv"), doctest::Contains(":2"));
}

TEST_CASE("evaluate_predictions groups by task and variant") {
  const std::map<std::string, std::map<std::string, double>> truth{
      {"t", {{"a", 1.0}, {"b", 2.0}}}};
  const std::vector<PredictionOutput> preds{
      {"a", "t", 2.0, {}, Variant::Full, false},
      {"b", "t", 4.0, {}, Variant::Full, false},
      {"a", "t", 1.0, {}, Variant::SingleLlm, false},
      {"b", "t", 2.0, {}, Variant::SingleLlm, false},
  };
  const auto reports = evaluate_predictions(preds, truth);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].variant == Variant::Full);
  CHECK(reports[0].mse == 2.5);
  CHECK(reports[1].mae == 0.0);

  auto missing = preds;
  missing.push_back({"z", "t", 1.0, {}, Variant::Full, false});
  try {
    evaluate_predictions(missing, truth);
    FAIL("expected AlignmentFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlignmentFailure);
    CHECK(std::string(e.what()).find("z") != std::string::npos);
  }
}
