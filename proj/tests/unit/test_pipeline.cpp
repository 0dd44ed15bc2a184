#include <doctest.h>

#include <fstream>

#include "doubles.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/evaluation.hpp"
#include "urbanmas/guidance.hpp"
#include "urbanmas/llm/mock_backend.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/pipeline.hpp"
#include "urbanmas/serialization.hpp"

using namespace urbanmas;
using llm::CountingBackend;

namespace {

const TaskSpec kTask{"running_amount", "Running activity.", "running_amount"};

std::vector<LocationSample> samples() {
  return {
      {"a", 35.0, 139.0, "Tokyo", std::string("1 A St"), {{"Park", "leisure=park", 20}}, {"a.jpg"}, {{kTask.id, 2.0}}},
      {"b", 45.0, 9.0, "Milan", std::string("2 B St"), {}, {}, {{kTask.id, 5.0}}},
      {"c", 47.0, -122.0, "Seattle", std::nullopt, {}, {}, {{kTask.id, 9.0}}},
  };
}

std::map<std::string, FactorMap> guided() {
  return {{kTask.id, FactorGuide(llm::MockBackend::synthetic()).guide(kTask).factors}};
}

PipelineConfig serial_cfg(std::size_t workers = 1) {
  PipelineConfig cfg;
  cfg.workers = workers;
  cfg.extraction.concurrent = false;
  return cfg;
}

std::string slurp_tree(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    out += std::filesystem::relative(f, root).string() + "\n";
    out.append(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

}  // namespace

TEST_CASE("generic placeholder factors are valid for every pair") {
  const auto m = generic_factor_map(kTask.id);
  REQUIRE(m.size() == 4);
  for (const auto& [key, fs] : m) {
    CHECK(fs.key() == key);
    CHECK(validate_factor_set(fs).ok());
    CHECK(fs.names() == m.begin()->second.names());
  }
}

TEST_CASE("per-variant call accounting") {
  const auto g = guided();
  const auto s = samples()[0];
  for (const auto v : all_variants()) {
    auto counting = std::make_shared<CountingBackend>(llm::MockBackend::synthetic());
    Pipeline p(counting, serial_cfg());
    const auto out = p.predict(s, kTask, v, &g.at(kTask.id));
    CHECK(out.prediction.variant == v);
    CHECK(out.prediction.value >= 0.0);
    CHECK(out.prediction.value <= 10.0);
    std::size_t refine = 0;
    for (const auto& [k, t] : out.transcripts) refine += static_cast<std::size_t>(t.refine_calls);
    switch (v) {
      case Variant::Full:
      case Variant::NoFactors:
        CHECK(out.transcripts.size() == 4);
        CHECK(counting->count(llm::agents::kExtract) == 8);
        CHECK(counting->count(llm::agents::kRefine) == refine);
        CHECK(counting->count(llm::agents::kInfer) == 1);
        CHECK(counting->total() == 8 + refine + 1);
        break;
      case Variant::NoReliability:
        CHECK(counting->total() == 5);
        CHECK(refine == 0);
        for (const auto& [k, t] : out.transcripts) CHECK_FALSE(t.variant_b);
        break;
      case Variant::SingleLlm:
        CHECK(counting->total() == 1);
        CHECK(counting->count(llm::agents::kSingleLlm) == 1);
        break;
    }
  }
}

TEST_CASE("guided variants require factor sets") {
  Pipeline p(llm::MockBackend::synthetic(), serial_cfg());
  CHECK_THROWS_AS(p.predict(samples()[0], kTask, Variant::Full, nullptr), Error);
  CHECK_NOTHROW(p.predict(samples()[0], kTask, Variant::NoFactors, nullptr));
  try {
    p.run(samples(), {kTask}, {Variant::NoReliability}, {});
    FAIL("expected a Config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("run is deterministic across worker widths") {
  const auto g = guided();
  std::vector<std::string> dumps;
  for (std::size_t workers : {1u, 4u, 4u}) {
    testing::TempDir dir;
    auto cfg = serial_cfg(workers);
    cfg.extraction.concurrent = workers > 1;
    cfg.audit_dir = dir.path();
    Pipeline p(llm::MockBackend::synthetic(), cfg);
    const auto result = p.run(samples(), {kTask}, {all_variants().begin(), all_variants().end()}, g);
    CHECK(result.failures.empty());
    CHECK(result.predictions.size() == 12);
    std::string dump;
    for (const auto& pred : result.predictions) dump += nlohmann::json(pred).dump() + "\n";
    dumps.push_back(dump + slurp_tree(dir.path()));
  }
  CHECK(dumps[0] == dumps[1]);
  CHECK(dumps[1] == dumps[2]);
}

TEST_CASE("failures are recorded per location and excluded from metrics") {
  auto synth = llm::MockBackend::synthetic();
  // Every call about location "b" fails.
  auto flaky = std::make_shared<testing::FnBackend>([&](const llm::ChatRequest& req) -> std::string {
    if (req.user_prompt.find("Location: b\n") != std::string::npos)
      throw Error(ErrorCode::TransportExhausted, "simulated outage");
    return synth->complete(req).text;
  });
  Pipeline p(flaky, serial_cfg(2));
  log::Capture capture;
  const auto exp = run_experiment(samples(), {kTask}, {Variant::Full, Variant::SingleLlm}, p, guided());
  CHECK(exp.run.failures.size() == 2);
  for (const auto& f : exp.run.failures) CHECK(f.location_id == "b");
  CHECK(exp.excluded_locations == 1);
  REQUIRE(exp.reports.size() == 2);
  for (const auto& r : exp.reports) CHECK(r.n == 2);
  CHECK(capture.contains("excluded"));
}

TEST_CASE("run_experiment yields one report per variant") {
  Pipeline p(llm::MockBackend::synthetic(), serial_cfg(4));
  const auto exp = run_experiment(samples(), {kTask}, {all_variants().begin(), all_variants().end()}, p, guided());
  REQUIRE(exp.reports.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(exp.reports[i].variant == all_variants()[i]);
    CHECK(exp.reports[i].n == 3);
    CHECK(std::abs(exp.reports[i].rmse * exp.reports[i].rmse - exp.reports[i].mse) <= 1e-12);
  }
  const auto again = run_experiment(samples(), {kTask}, {all_variants().begin(), all_variants().end()}, p, guided());
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.reports[i].mse == exp.reports[i].mse);
}

TEST_CASE("run statistics are consistent") {
  Pipeline p(llm::MockBackend::synthetic(), serial_cfg());
  const auto result = p.run(samples(), {kTask}, {Variant::Full}, guided());
  CHECK(result.stats.predictions == 3);
  // A field repaired in round r has received exactly r refiner calls.
  CHECK(result.stats.repair_rounds == result.stats.refine_calls);
  CHECK(result.stats.reasks == 0);
}
