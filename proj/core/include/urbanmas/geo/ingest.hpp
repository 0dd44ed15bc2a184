#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"
#include "urbanmas/http.hpp"
#include "urbanmas/llm/rate_limiter.hpp"

namespace urbanmas::geo {

struct IngestConfig {
  double poi_radius_m = 300.0;
  std::size_t poi_limit = 25;
  std::filesystem::path cache_dir = "cache/geo";
  bool offline = false;

  std::string geocoder_url = "https://nominatim.openstreetmap.org";
  std::string overpass_url = "https://overpass-api.de/api/interpreter";
  std::string streetview_url = "https://maps.googleapis.com/maps/api/streetview";
  /// Street-view metadata needs a key; read from URBANMAS_STREETVIEW_KEY.
  std::string streetview_key;
  /// When set (and online), image bytes are cached next to the metadata and
  /// the local path is returned instead of the URL.
  bool download_images = false;
  std::string user_agent = "urbanmas/0.1 (research prototype)";
  /// Public-service usage policy: spacing between live calls per upstream.
  std::chrono::milliseconds upstream_spacing{1000};
};

/// Throws Error(Config) when radius or limit are not positive.
void validate(const IngestConfig& cfg);

/// "35.65860_139.74540": coordinates rounded to 5 decimals.
std::string cache_key(double lat, double lon);

struct IngestStats {
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t network_calls = 0;

  double hit_rate() const noexcept {
    const auto total = cache_hits + cache_misses;
    return total == 0 ? 1.0 : static_cast<double>(cache_hits) / static_cast<double>(total);
  }
};

struct EnrichResult {
  LocationSample sample;
  std::vector<std::string> warnings;
  /// Upstreams that failed for this sample: "geocoder", "pois", "streetview".
  std::vector<std::string> failed_upstreams;
};

/// Resolves coordinates into address, POIs and street-view references. Raw
/// upstream responses are cached as one JSON file per key under cache_dir;
/// pre-populated cache files double as offline fixtures.
class GeoIngestor {
 public:
  GeoIngestor(IngestConfig cfg, std::shared_ptr<HttpTransport> transport,
              NowFn now = system_now(), SleepFn sleep = system_sleep());

  std::string reverse_geocode(double lat, double lon);
  /// At most poi_limit entries within poi_radius_m, ascending by distance.
  std::vector<PoiEntry> nearby_pois(double lat, double lon);
  std::vector<std::string> streetview_refs(double lat, double lon);
  /// Returns a populated copy; a single failing upstream degrades to a
  /// warning and leaves that field as it was.
  EnrichResult enrich(const LocationSample& sample);

  IngestStats stats() const noexcept;
  const IngestConfig& config() const noexcept { return cfg_; }

  std::filesystem::path geocode_cache_path(double lat, double lon) const;
  std::filesystem::path poi_cache_path(double lat, double lon) const;
  std::filesystem::path streetview_cache_path(double lat, double lon) const;
  std::filesystem::path streetview_image_path(double lat, double lon) const;

 private:
  // Reads the cached document or calls `fetch` and stores its result.
  nlohmann::json cached(const std::filesystem::path& path, const char* upstream,
                        const std::function<nlohmann::json()>& fetch);
  std::mutex& key_mutex(const std::string& key);
  HttpResponse call(HttpRequest req, IntervalLimiter& limiter, const char* upstream);

  IngestConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  IntervalLimiter geocoder_limiter_;
  IntervalLimiter overpass_limiter_;
  IntervalLimiter streetview_limiter_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> network_{0};
  std::mutex keys_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
};

/// Converts an Overpass JSON response into POI entries measured from
/// (lat, lon); elements without a name or coordinates are skipped.
std::vector<PoiEntry> pois_from_overpass(const nlohmann::json& overpass, double lat, double lon);

}  // namespace urbanmas::geo
