#include "urbanmas/cli/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "urbanmas/error.hpp"
#include "urbanmas/serialization.hpp"

namespace urbanmas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendMode m) noexcept {
  switch (m) {
    case BackendMode::Live: return "live";
    case BackendMode::Mock: return "mock";
    case BackendMode::Replay: return "replay";
    case BackendMode::Record: return "record";
  }
  return "mock";
}

std::optional<BackendMode> parse_backend_mode(std::string_view s) noexcept {
  for (auto m : {BackendMode::Live, BackendMode::Mock, BackendMode::Replay, BackendMode::Record})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::vector<TaskSpec> default_tasks() {
  return {
      {"running_amount",
       "Intensity of recreational running activity around the location, on a 0-10 scale.",
       "running_amount"},
      {"boringness", "How boring the streetscape at the location looks to a pedestrian, 0-10.",
       "boringness"},
      {"liveliness", "How lively the streetscape at the location looks to a pedestrian, 0-10.",
       "liveliness"},
  };
}

std::vector<TaskSpec> RunConfig::active_tasks() const {
  if (selected_tasks.empty()) return tasks;
  std::vector<TaskSpec> out;
  for (const auto& id : selected_tasks) {
    auto it = std::find_if(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.id == id; });
    if (it == tasks.end()) {
      std::string known;
      for (const auto& t : tasks) known += (known.empty() ? "" : ", ") + t.id;
      throw Error(ErrorCode::InvalidArgument,
                  "unknown task id '" + id + "' (known: " + known + ")");
    }
    out.push_back(*it);
  }
  return out;
}

namespace {

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

class Reader {
 public:
  Reader(const json& obj, std::string where, const fs::path& base)
      : obj_(obj), where_(std::move(where)), base_(base) {
    if (!obj_.is_object()) throw Error(ErrorCode::Config, where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& dest) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      if constexpr (is_optional<T>::value)
        dest = it->get<typename T::value_type>();
      else
        dest = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::Config, where_ + "." + key + " has the wrong type");
    }
  }

  void path(const char* key, fs::path& dest) {
    std::string s;
    get(key, s);
    if (!s.empty()) dest = resolve(s);
  }

  void path(const char* key, std::optional<fs::path>& dest) {
    std::string s;
    get(key, s);
    if (!s.empty()) dest = resolve(s);
  }

  void millis(const char* key, std::chrono::milliseconds& dest) {
    std::optional<long long> v;
    get(key, v);
    if (v) dest = std::chrono::milliseconds(*v);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) throw Error(ErrorCode::Config, where_ + ": unknown key '" + k + "'");
  }

 private:
  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_absolute() ? p : base_ / p;
  }

  const json& obj_;
  std::string where_;
  fs::path base_;
  std::set<std::string, std::less<>> seen_;
};

Variant parse_variant_or_throw(const std::string& s) {
  auto v = parse_variant(s);
  if (!v)
    throw Error(ErrorCode::Config,
                "unknown variant '" + s + "' (full, no_factors, no_reliability, single_llm)");
  return *v;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base) {
  RunConfig cfg;
  cfg.ingest.cache_dir.clear();  // derived from out_dir unless given
  Reader r(doc, "config", base);

  std::string mode;
  r.get("backend", mode);
  if (!mode.empty()) {
    auto m = parse_backend_mode(mode);
    if (!m) throw Error(ErrorCode::Config, "unknown backend mode '" + mode + "'");
    cfg.backend = *m;
  }
  std::string source;
  r.get("record_source", source);
  if (!source.empty()) {
    auto m = parse_backend_mode(source);
    if (!m || (*m != BackendMode::Live && *m != BackendMode::Mock))
      throw Error(ErrorCode::Config, "record_source must be 'live' or 'mock'");
    cfg.record_source = *m;
  }
  r.path("cassette", cfg.cassette);
  r.path("dataset", cfg.dataset);
  r.path("enriched_dataset", cfg.enriched_dataset);
  r.path("factor_dir", cfg.factor_dir);
  r.path("predictions", cfg.predictions);
  r.path("ground_truth", cfg.ground_truth);
  r.get("rescale_ground_truth", cfg.rescale_ground_truth);
  r.path("out_dir", cfg.out_dir);
  r.get("workers", cfg.workers);
  r.get("seed", cfg.seed);
  r.get("audit", cfg.audit);

  if (const auto* tasks = r.child("tasks")) {
    try {
      cfg.tasks = tasks->get<std::vector<TaskSpec>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Config, std::string("config.tasks: ") + e.what());
    }
  }
  r.get("selected_tasks", cfg.selected_tasks);

  std::vector<std::string> variants;
  r.get("variants", variants);
  if (!variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : variants) cfg.variants.push_back(parse_variant_or_throw(v));
  }

  if (const auto* rel = r.child("reliability")) {
    Reader rr(*rel, "config.reliability", base);
    rr.get("threshold", cfg.reliability.threshold);
    rr.get("jaccard_weight", cfg.reliability.jaccard_weight);
    rr.get("seq_weight", cfg.reliability.seq_weight);
    rr.get("max_repair_rounds", cfg.reliability.max_repair_rounds);
    rr.finish();
  }

  if (const auto* ing = r.child("ingest")) {
    Reader ir(*ing, "config.ingest", base);
    ir.get("poi_radius_m", cfg.ingest.poi_radius_m);
    ir.get("poi_limit", cfg.ingest.poi_limit);
    ir.path("cache_dir", cfg.ingest.cache_dir);
    ir.get("offline", cfg.ingest.offline);
    ir.get("geocoder_url", cfg.ingest.geocoder_url);
    ir.get("overpass_url", cfg.ingest.overpass_url);
    ir.get("streetview_url", cfg.ingest.streetview_url);
    ir.get("download_images", cfg.ingest.download_images);
    ir.get("user_agent", cfg.ingest.user_agent);
    ir.millis("upstream_spacing_ms", cfg.ingest.upstream_spacing);
    ir.finish();
  }

  if (const auto* llm = r.child("llm")) {
    Reader lr(*llm, "config.llm", base);
    lr.get("api_base", cfg.llm.api_base);
    lr.get("model", cfg.llm.model);
    lr.get("temperature", cfg.llm.temperature);
    lr.get("top_p", cfg.llm.top_p);
    lr.get("max_attempts", cfg.llm.max_attempts);
    lr.millis("base_backoff_ms", cfg.llm.base_backoff);
    lr.get("max_in_flight", cfg.llm.max_in_flight);
    lr.get("requests_per_minute", cfg.llm.requests_per_minute);
    lr.millis("timeout_ms", cfg.llm.timeout);
    lr.finish();
  }
  r.finish();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config '" + path.string() + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw Error(ErrorCode::Config, "config '" + path.string() + "' is not valid JSON");
  return parse_run_config(doc, fs::absolute(path).parent_path());
}

void finalize(RunConfig& cfg) {
  if (cfg.workers < 1) throw Error(ErrorCode::Config, "workers must be >= 1");
  if (cfg.variants.empty()) throw Error(ErrorCode::Config, "no variants selected");
  if (cfg.enriched_dataset.empty()) cfg.enriched_dataset = cfg.out_dir / "enriched.jsonl";
  if (cfg.factor_dir.empty()) cfg.factor_dir = cfg.out_dir / "factors";
  if (cfg.predictions.empty()) cfg.predictions = cfg.out_dir / "predictions.jsonl";
  if (cfg.ingest.cache_dir.empty()) cfg.ingest.cache_dir = cfg.out_dir / "geo_cache";
  try {
    validate(cfg.reliability);
    geo::validate(cfg.ingest);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  if (cfg.tasks.empty()) cfg.tasks = default_tasks();
  require_valid_tasks(cfg.tasks);

  if ((cfg.backend == BackendMode::Replay || cfg.backend == BackendMode::Record) &&
      cfg.cassette.empty())
    throw Error(ErrorCode::Config, std::string(to_string(cfg.backend)) +
                                       " mode needs a cassette (--cassette PATH)");
  if (cfg.ingest.offline && cfg.backend == BackendMode::Live)
    throw Error(ErrorCode::Config, "--offline cannot be combined with the live backend");
  if (cfg.ingest.offline && cfg.backend == BackendMode::Record &&
      cfg.record_source == BackendMode::Live)
    throw Error(ErrorCode::Config, "--offline cannot record from the live backend");

  cfg.llm = llm::LiveConfig::from_env(cfg.llm);
  cfg.llm.seed = cfg.seed;
  if (const char* key = std::getenv("URBANMAS_STREETVIEW_KEY"); key && *key)
    cfg.ingest.streetview_key = key;
}

nlohmann::json snapshot(const RunConfig& cfg) {
  json variants = json::array();
  for (auto v : cfg.variants) variants.push_back(to_string(v));
  json j{
      {"backend", to_string(cfg.backend)},
      {"cassette", cfg.cassette.generic_string()},
      {"dataset", cfg.dataset.generic_string()},
      {"enriched_dataset", cfg.enriched_dataset.generic_string()},
      {"factor_dir", cfg.factor_dir.generic_string()},
      {"predictions", cfg.predictions.generic_string()},
      {"rescale_ground_truth", cfg.rescale_ground_truth},
      {"out_dir", cfg.out_dir.generic_string()},
      {"tasks", cfg.tasks},
      {"selected_tasks", cfg.selected_tasks},
      {"variants", variants},
      {"workers", cfg.workers},
      {"seed", cfg.seed},
      {"audit", cfg.audit},
      {"reliability",
       {{"threshold", cfg.reliability.threshold},
        {"jaccard_weight", cfg.reliability.jaccard_weight},
        {"seq_weight", cfg.reliability.seq_weight},
        {"max_repair_rounds", cfg.reliability.max_repair_rounds}}},
      {"ingest",
       {{"poi_radius_m", cfg.ingest.poi_radius_m},
        {"poi_limit", cfg.ingest.poi_limit},
        {"cache_dir", cfg.ingest.cache_dir.generic_string()},
        {"offline", cfg.ingest.offline},
        {"geocoder_url", cfg.ingest.geocoder_url},
        {"overpass_url", cfg.ingest.overpass_url},
        {"streetview_url", cfg.ingest.streetview_url},
        {"download_images", cfg.ingest.download_images},
        {"upstream_spacing_ms", cfg.ingest.upstream_spacing.count()}}},
      {"llm",
       {{"api_base", cfg.llm.api_base},
        {"model", cfg.llm.model},
        {"max_attempts", cfg.llm.max_attempts},
        {"base_backoff_ms", cfg.llm.base_backoff.count()},
        {"max_in_flight", cfg.llm.max_in_flight},
        {"requests_per_minute", cfg.llm.requests_per_minute}}},
  };
  if (cfg.backend == BackendMode::Record) j["record_source"] = to_string(cfg.record_source);
  if (cfg.ground_truth) j["ground_truth"] = cfg.ground_truth->generic_string();
  if (cfg.llm.temperature) j["llm"]["temperature"] = *cfg.llm.temperature;
  if (cfg.llm.top_p) j["llm"]["top_p"] = *cfg.llm.top_p;
  return j;
}

}  // namespace urbanmas::cli
