#include "urbanmas/cli/app.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "urbanmas/cli/run_config.hpp"
#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/evaluation.hpp"
#include "urbanmas/geo/ingest.hpp"
#include "urbanmas/guidance.hpp"
#include "urbanmas/hashing.hpp"
#include "urbanmas/llm/cassette.hpp"
#include "urbanmas/llm/live_backend.hpp"
#include "urbanmas/llm/mock_backend.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/parallel.hpp"
#include "urbanmas/pipeline.hpp"
#include "urbanmas/serialization.hpp"

#ifndef URBANMAS_VERSION
#define URBANMAS_VERSION "0.0.0"
#endif

namespace urbanmas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig cfg;
  Services& services;
  std::ostream& out;
  std::shared_ptr<HttpTransport> transport;
  NowFn now;
  SleepFn sleep;
};

std::shared_ptr<llm::ChatBackend> make_backend(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto live = [&] {
    return std::make_shared<llm::LiveBackend>(cfg.llm, ctx.transport, ctx.now, ctx.sleep);
  };
  std::shared_ptr<llm::ChatBackend> inner;
  switch (cfg.backend) {
    case BackendMode::Mock:
      inner = llm::MockBackend::synthetic();
      break;
    case BackendMode::Live:
      inner = live();
      break;
    case BackendMode::Replay:
      if (!fs::exists(cfg.cassette))
        throw Error(ErrorCode::Config, "cassette '" + cfg.cassette.string() + "' does not exist");
      inner = std::make_shared<llm::ReplayBackend>(std::make_shared<llm::Cassette>(cfg.cassette));
      break;
    case BackendMode::Record: {
      std::shared_ptr<llm::ChatBackend> source;
      if (cfg.record_source == BackendMode::Mock)
        source = llm::MockBackend::synthetic();
      else
        source = live();
      inner = std::make_shared<llm::RecordingBackend>(
          std::move(source), std::make_shared<llm::Cassette>(cfg.cassette));
      break;
    }
  }
  auto counting = std::make_shared<llm::CountingBackend>(std::move(inner));
  ctx.services.backend = counting;
  return counting;
}

json file_digest(const fs::path& p) {
  json j{{"path", p.generic_string()}};
  if (fs::exists(p)) j["sha256"] = sha256_file(p);
  return j;
}

void write_manifest(const Context& ctx, const std::string& command, json details) {
  const auto& cfg = ctx.cfg;
  json m{{"command", command},
         {"version", URBANMAS_VERSION},
         {"backend", to_string(cfg.backend)},
         {"config", snapshot(cfg)},
         {"inputs", json::object()}};
  if (!cfg.dataset.empty()) m["inputs"]["dataset"] = file_digest(cfg.dataset);
  if (!cfg.cassette.empty()) m["inputs"]["cassette"] = file_digest(cfg.cassette);
  m["details"] = std::move(details);
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / ("manifest." + command + ".json"), m.dump(2) + "\n");
}

std::string calls_summary(const llm::CountingBackend& b) {
  std::string s = fmt::format("backend calls: {}", b.total());
  const auto by = b.by_agent();
  if (!by.empty()) {
    s += " (";
    bool first = true;
    for (const auto& [agent, n] : by) {
      s += fmt::format("{}{} {}", first ? "" : ", ", agent, n);
      first = false;
    }
    s += ")";
  }
  return s;
}

int cmd_factors(Context& ctx) {
  const auto tasks = ctx.cfg.active_tasks();
  auto backend = make_backend(ctx);
  GuidanceConfig gcfg;
  gcfg.concurrent = ctx.cfg.workers > 1;
  FactorGuide guide(backend, gcfg);

  json details{{"tasks", json::array()}};
  for (const auto& task : tasks) {
    bool hit = false;
    const auto path = factor_cache_path(ctx.cfg.factor_dir, task.id);
    const auto result = guide_cached(guide, task, ctx.cfg.factor_dir, &hit);
    ctx.out << fmt::format("Task: {} ({})\n", task.id, hit ? "cached" : "generated");
    for (const auto key : all_factor_keys()) {
      const auto& fs = result.factors.at(key);
      ctx.out << fmt::format("  {} / {}\n", display_name(key.dimension), display_name(key.level));
      for (std::size_t i = 0; i < fs.factors.size(); ++i)
        ctx.out << fmt::format("    {}. {}: {}\n", i + 1, fs.factors[i].name,
                               fs.factors[i].description);
    }
    ctx.out << fmt::format("  cache: {}\n", path.string());
    details["tasks"].push_back({{"task_id", task.id},
                                {"cache_hit", hit},
                                {"factor_cache", file_digest(path)}});
  }
  ctx.out << calls_summary(*ctx.services.backend) << "\n";
  details["backend_calls"] = ctx.services.backend->total();
  write_manifest(ctx, "factors", std::move(details));
  return kExitOk;
}

int cmd_ingest(Context& ctx) {
  if (ctx.cfg.dataset.empty()) throw Error(ErrorCode::Config, "no dataset configured");
  const auto samples = load_dataset(ctx.cfg.dataset);
  if (samples.empty())
    throw Error(ErrorCode::EmptyInput, "dataset '" + ctx.cfg.dataset.string() + "' is empty");

  geo::GeoIngestor ingestor(ctx.cfg.ingest, ctx.transport, ctx.now, ctx.sleep);
  std::vector<geo::EnrichResult> results(samples.size());
  parallel_for(samples.size(), ctx.cfg.workers,
               [&](std::size_t i) { results[i] = ingestor.enrich(samples[i]); });

  std::vector<LocationSample> enriched;
  std::size_t warnings = 0, with_address = 0, with_pois = 0, with_views = 0, dark = 0;
  for (auto& r : results) {
    warnings += r.warnings.size();
    with_address += r.sample.address.has_value();
    with_pois += !r.sample.pois.empty();
    with_views += !r.sample.streetview_refs.empty();
    const auto failed = [&](const char* u) {
      return std::find(r.failed_upstreams.begin(), r.failed_upstreams.end(), u) !=
             r.failed_upstreams.end();
    };
    dark += failed("geocoder") && failed("pois");
    enriched.push_back(std::move(r.sample));
  }
  const auto stats = ingestor.stats();
  ctx.out << fmt::format(
      "ingested {} location(s): {} with address, {} with POIs, {} with street view; {} "
      "warning(s)\n",
      enriched.size(), with_address, with_pois, with_views, warnings);
  ctx.out << fmt::format("cache: {} hit(s), {} miss(es), hit rate {:.1f}%; network calls {}\n",
                         stats.cache_hits, stats.cache_misses, 100.0 * stats.hit_rate(),
                         stats.network_calls);

  json details{{"locations", enriched.size()},
               {"warnings", warnings},
               {"cache_hits", stats.cache_hits},
               {"cache_misses", stats.cache_misses},
               {"network_calls", stats.network_calls}};
  if (dark == enriched.size()) {
    details["status"] = "failed";
    write_manifest(ctx, "ingest", std::move(details));
    throw Error(ErrorCode::UpstreamUnavailable,
                "every upstream was unreachable for every location; nothing was enriched");
  }
  save_dataset(ctx.cfg.enriched_dataset, enriched);
  ctx.out << fmt::format("wrote {}\n", ctx.cfg.enriched_dataset.string());
  details["status"] = "ok";
  details["enriched_dataset"] = file_digest(ctx.cfg.enriched_dataset);
  write_manifest(ctx, "ingest", std::move(details));
  return kExitOk;
}

fs::path predict_input(const RunConfig& cfg) {
  if (fs::exists(cfg.enriched_dataset)) return cfg.enriched_dataset;
  if (cfg.dataset.empty())
    throw Error(ErrorCode::Config, "no dataset configured and '" +
                                       cfg.enriched_dataset.string() + "' does not exist");
  log::info("no enriched dataset at " + cfg.enriched_dataset.string() + "; reading " +
            cfg.dataset.string());
  return cfg.dataset;
}

int cmd_predict(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto tasks = cfg.active_tasks();
  const auto input = predict_input(cfg);
  const auto samples = load_dataset(input);
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "dataset '" + input.string() + "' is empty");

  std::map<std::string, FactorMap> guided;
  json caches = json::object();
  for (auto v : cfg.variants) {
    if (!needs_guided_factors(v)) continue;
    for (const auto& task : tasks) {
      if (guided.count(task.id)) continue;
      const auto path = factor_cache_path(cfg.factor_dir, task.id);
      if (!fs::exists(path))
        throw Error(ErrorCode::Config,
                    fmt::format("variant {} needs predictive factors for task '{}', but {} does "
                                "not exist; run `urbanmas factors --tasks {}` first",
                                to_string(v), task.id, path.string(), task.id));
      guided[task.id] = load_factor_cache(path).factors;
      caches[task.id] = file_digest(path);
    }
  }

  auto backend = make_backend(ctx);
  PipelineConfig pcfg;
  pcfg.reliability = cfg.reliability;
  pcfg.workers = cfg.workers;
  pcfg.extraction.concurrent = false;
  if (cfg.audit) pcfg.audit_dir = cfg.out_dir / "audit";
  Pipeline pipeline(backend, pcfg);
  const auto result = pipeline.run(samples, tasks, cfg.variants, guided);

  std::vector<json> lines;
  for (const auto& p : result.predictions) lines.emplace_back(p);
  write_jsonl(cfg.predictions, lines);

  const auto& st = result.stats;
  ctx.out << fmt::format("{} prediction(s), {} failure(s); wrote {}\n", result.predictions.size(),
                         result.failures.size(), cfg.predictions.string());
  ctx.out << fmt::format(
      "clamped {}, re-asks {}, refine calls {}, repair rounds {}, low-confidence records {}\n",
      st.clamped, st.reasks, st.refine_calls, st.repair_rounds, st.low_confidence_records);
  ctx.out << calls_summary(*ctx.services.backend) << "\n";
  for (const auto& f : result.failures)
    ctx.out << fmt::format("FAILED {} {} {}: {}\n", f.location_id, f.task_id,
                           to_string(f.variant), f.message);

  json details{{"input", file_digest(input)},
               {"factor_caches", caches},
               {"predictions", file_digest(cfg.predictions)},
               {"failures", result.failures.size()},
               {"backend_calls", ctx.services.backend->total()}};
  write_manifest(ctx, "predict", std::move(details));
  return result.failures.empty() ? kExitOk : kExitFailure;
}

int cmd_evaluate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<PredictionOutput> preds;
  for (const auto& line : read_jsonl(cfg.predictions)) preds.push_back(line.get<PredictionOutput>());
  if (!cfg.selected_tasks.empty()) {
    const auto tasks = cfg.active_tasks();
    std::erase_if(preds, [&](const PredictionOutput& p) {
      return std::none_of(tasks.begin(), tasks.end(),
                          [&](const TaskSpec& t) { return t.id == p.task_id; });
    });
  }
  if (preds.empty())
    throw Error(ErrorCode::EmptyInput, "no predictions in '" + cfg.predictions.string() + "'");

  std::map<std::string, std::map<std::string, double>> truth;
  json truth_source;
  if (cfg.ground_truth) {
    truth = ground_truth_by_task(load_ground_truth(*cfg.ground_truth), cfg.rescale_ground_truth);
    truth_source = file_digest(*cfg.ground_truth);
  } else {
    const auto input = predict_input(cfg);
    for (const auto& s : load_dataset(input))
      for (const auto& [task, v] : s.ground_truth) truth[task][s.id] = v;
    truth_source = file_digest(input);
  }

  const auto reports = evaluate_predictions(preds, truth);
  const auto table = render_report_table(reports);
  write_text_file(cfg.out_dir / "report.csv", render_report_csv(reports));
  write_text_file(cfg.out_dir / "report.txt", table);
  ctx.out << table;
  ctx.out << fmt::format("wrote {} and {}\n", (cfg.out_dir / "report.csv").string(),
                         (cfg.out_dir / "report.txt").string());
  write_manifest(ctx, "evaluate",
                 {{"predictions", file_digest(cfg.predictions)},
                  {"ground_truth", truth_source},
                  {"reports", reports.size()}});
  return kExitOk;
}

struct Flags {
  std::string config;
  std::string backend;
  std::vector<std::string> variants;
  std::string tasks;
  bool offline = false;
  std::string cassette;
  std::string out;
  std::optional<std::size_t> workers;
  int verbosity = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--backend", f.backend, "live | mock | replay | record")
      ->check(CLI::IsMember({"live", "mock", "replay", "record"}));
  cmd->add_option("--variant", f.variants,
                  "full | no_factors | no_reliability | single_llm (repeatable)")
      ->check(CLI::IsMember({"full", "no_factors", "no_reliability", "single_llm"}));
  cmd->add_option("--tasks", f.tasks, "comma-separated task ids");
  cmd->add_flag("--offline", f.offline, "serve geo data from the cache only");
  cmd->add_option("--cassette", f.cassette, "record/replay cassette (JSON lines)");
  cmd->add_option("--out", f.out, "run output directory");
  cmd->add_option("--workers", f.workers, "worker pool width")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", f.verbosity, "debug logging");
  cmd->add_flag("-q,--quiet", f.quiet, "warnings and errors only");
}

RunConfig build_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? parse_run_config(json::object(), fs::current_path())
                                   : load_run_config(f.config);
  if (!f.backend.empty()) cfg.backend = *parse_backend_mode(f.backend);
  if (!f.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : f.variants) cfg.variants.push_back(*parse_variant(v));
  }
  if (!f.tasks.empty()) {
    cfg.selected_tasks.clear();
    std::stringstream ss(f.tasks);
    std::string id;
    while (std::getline(ss, id, ','))
      if (!id.empty()) cfg.selected_tasks.push_back(id);
  }
  if (f.offline) cfg.ingest.offline = true;
  if (!f.cassette.empty()) cfg.cassette = fs::absolute(f.cassette);
  if (!f.out.empty()) {
    // Derived paths follow a relocated output directory.
    cfg.out_dir = fs::absolute(f.out);
  }
  if (f.workers) cfg.workers = *f.workers;
  finalize(cfg);
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, Services& services) {
  std::ostream& out = services.out ? *services.out : std::cout;
  std::ostream& err = services.err ? *services.err : std::cerr;

  CLI::App app{"Multi-agent urban prediction engine", "urbanmas"};
  app.set_version_flag("--version", URBANMAS_VERSION);
  app.require_subcommand(1, 1);
  Flags flags;
  auto* factors = app.add_subcommand("factors", "generate or load the predictive factor cache");
  auto* ingest = app.add_subcommand("ingest", "enrich the dataset with geo context");
  auto* predict = app.add_subcommand("predict", "run the pipeline variants");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  for (auto* c : {factors, ingest, predict, evaluate}) add_common(c, flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << URBANMAS_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'urbanmas --help' for usage\n";
    return kExitUsage;
  }
  for (auto* c : {factors, ingest, predict, evaluate}) {
    if (!c->parsed()) continue;
    if (c->count("--help")) {
      out << c->help();
      return kExitOk;
    }
  }

  log::set_min_level(flags.quiet ? log::Level::Warn
                                 : flags.verbosity > 0 ? log::Level::Debug : log::Level::Info);

  Context ctx{RunConfig{}, services, out, services.transport, services.now, services.sleep};
  if (!ctx.transport) ctx.transport = make_default_transport();
  if (!ctx.now) ctx.now = system_now();
  if (!ctx.sleep) ctx.sleep = system_sleep();

  try {
    ctx.cfg = build_config(flags);
    if (!ctx.cfg.selected_tasks.empty()) (void)ctx.cfg.active_tasks();
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (factors->parsed()) return cmd_factors(ctx);
    if (ingest->parsed()) return cmd_ingest(ctx);
    if (predict->parsed()) return cmd_predict(ctx);
    return cmd_evaluate(ctx);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::Config ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace urbanmas::cli
