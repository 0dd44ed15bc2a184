#include "urbanmas/geo/ingest.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/geo/haversine.hpp"
#include "urbanmas/logging.hpp"

namespace urbanmas::geo {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const IngestConfig& cfg) {
  if (!(cfg.poi_radius_m > 0.0)) throw Error(ErrorCode::Config, "poi_radius_m must be > 0");
  if (cfg.poi_limit == 0) throw Error(ErrorCode::Config, "poi_limit must be > 0");
}

std::string cache_key(double lat, double lon) { return fmt::format("{:.5f}_{:.5f}", lat, lon); }

GeoIngestor::GeoIngestor(IngestConfig cfg, std::shared_ptr<HttpTransport> transport, NowFn now,
                         SleepFn sleep)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      geocoder_limiter_(cfg_.upstream_spacing, now, sleep),
      overpass_limiter_(cfg_.upstream_spacing, now, sleep),
      streetview_limiter_(cfg_.upstream_spacing, now, sleep) {
  validate(cfg_);
}

fs::path GeoIngestor::geocode_cache_path(double lat, double lon) const {
  return cfg_.cache_dir / "geocode" / (cache_key(lat, lon) + ".json");
}

fs::path GeoIngestor::poi_cache_path(double lat, double lon) const {
  return cfg_.cache_dir / "pois" /
         fmt::format("{}_r{}.json", cache_key(lat, lon), static_cast<long>(cfg_.poi_radius_m));
}

fs::path GeoIngestor::streetview_cache_path(double lat, double lon) const {
  return cfg_.cache_dir / "streetview" / (cache_key(lat, lon) + ".json");
}

fs::path GeoIngestor::streetview_image_path(double lat, double lon) const {
  return cfg_.cache_dir / "streetview" / (cache_key(lat, lon) + ".jpg");
}

std::mutex& GeoIngestor::key_mutex(const std::string& key) {
  std::lock_guard lock(keys_mu_);
  auto& slot = key_mutexes_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

json GeoIngestor::cached(const fs::path& path, const char* upstream,
                         const std::function<json()>& fetch) {
  std::lock_guard lock(key_mutex(path.string()));
  if (fs::exists(path)) {
    auto doc = json::parse(read_text_file(path), nullptr, false);
    if (!doc.is_discarded()) {
      ++hits_;
      return doc;
    }
    log::warn("ignoring corrupt cache file " + path.string());
  }
  ++misses_;
  if (cfg_.offline)
    throw Error(ErrorCode::OfflineMiss,
                std::string(upstream) + ": offline and no cache entry at " + path.string());
  auto doc = fetch();
  write_text_file(path, doc.dump(2));
  return doc;
}

HttpResponse GeoIngestor::call(HttpRequest req, IntervalLimiter& limiter, const char* upstream) {
  limiter.acquire();
  ++network_;
  req.headers.emplace_back("User-Agent", cfg_.user_agent);
  auto res = transport_->send(req);
  if (res.transport_failed())
    throw Error(ErrorCode::UpstreamUnavailable, std::string(upstream) + ": " + res.error);
  if (res.status < 200 || res.status >= 300)
    throw Error(ErrorCode::UpstreamUnavailable,
                std::string(upstream) + ": HTTP " + std::to_string(res.status));
  return res;
}

std::string GeoIngestor::reverse_geocode(double lat, double lon) {
  if (!coordinates_in_range(lat, lon))
    throw Error(ErrorCode::InvalidArgument, "reverse_geocode: coordinates out of range");
  auto doc = cached(geocode_cache_path(lat, lon), "geocoder", [&] {
    HttpRequest req;
    req.url = fmt::format("{}/reverse?format=jsonv2&lat={:.6f}&lon={:.6f}&zoom=18",
                          cfg_.geocoder_url, lat, lon);
    auto res = call(std::move(req), geocoder_limiter_, "geocoder");
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::UpstreamUnavailable, "geocoder: non-JSON body");
    return j;
  });
  auto name = doc.value("display_name", std::string{});
  if (name.empty())
    throw Error(ErrorCode::UpstreamUnavailable,
                "geocoder: no address for " + cache_key(lat, lon) +
                    (doc.contains("error") ? " (" + doc["error"].dump() + ")" : ""));
  return name;
}

std::vector<PoiEntry> pois_from_overpass(const json& overpass, double lat, double lon) {
  static constexpr std::array<const char*, 12> kCategoryTags{
      "amenity", "shop",  "leisure", "tourism",  "public_transport", "railway",
      "highway", "office", "historic", "building", "landuse",          "natural"};
  std::vector<PoiEntry> out;
  const auto it = overpass.find("elements");
  if (it == overpass.end() || !it->is_array()) return out;
  for (const auto& el : *it) {
    const auto tags = el.value("tags", json::object());
    const auto name = tags.value("name", std::string{});
    if (name.empty()) continue;
    double plat = 0.0;
    double plon = 0.0;
    if (el.contains("lat") && el.contains("lon")) {
      plat = el["lat"].get<double>();
      plon = el["lon"].get<double>();
    } else if (el.contains("center")) {
      plat = el["center"].value("lat", 0.0);
      plon = el["center"].value("lon", 0.0);
    } else {
      continue;
    }
    std::string category = "other";
    for (const char* tag : kCategoryTags) {
      if (auto t = tags.find(tag); t != tags.end() && t->is_string()) {
        category = std::string(tag) + "=" + t->get<std::string>();
        break;
      }
    }
    out.push_back({name, category, haversine_m(lat, lon, plat, plon)});
  }
  return out;
}

std::vector<PoiEntry> GeoIngestor::nearby_pois(double lat, double lon) {
  if (!coordinates_in_range(lat, lon))
    throw Error(ErrorCode::InvalidArgument, "nearby_pois: coordinates out of range");
  auto doc = cached(poi_cache_path(lat, lon), "pois", [&] {
    const auto query = fmt::format(
        "[out:json][timeout:25];(node(around:{r},{lat:.6f},{lon:.6f})[name];"
        "way(around:{r},{lat:.6f},{lon:.6f})[name];);out center tags;",
        fmt::arg("r", cfg_.poi_radius_m), fmt::arg("lat", lat), fmt::arg("lon", lon));
    HttpRequest req;
    req.method = "POST";
    req.url = cfg_.overpass_url;
    req.content_type = "application/x-www-form-urlencoded";
    req.body = "data=" + url_encode(query);
    auto res = call(std::move(req), overpass_limiter_, "pois");
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::UpstreamUnavailable, "pois: non-JSON body");
    return j;
  });

  auto pois = pois_from_overpass(doc, lat, lon);
  std::erase_if(pois, [&](const PoiEntry& p) { return p.distance_m > cfg_.poi_radius_m; });
  std::stable_sort(pois.begin(), pois.end(), [](const PoiEntry& a, const PoiEntry& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.name < b.name;
  });
  if (pois.size() > cfg_.poi_limit) pois.resize(cfg_.poi_limit);
  return pois;
}

std::vector<std::string> GeoIngestor::streetview_refs(double lat, double lon) {
  if (!coordinates_in_range(lat, lon))
    throw Error(ErrorCode::InvalidArgument, "streetview_refs: coordinates out of range");
  const auto image = streetview_image_path(lat, lon);
  if (fs::exists(image)) {
    ++hits_;
    return {image.string()};
  }
  const auto meta_path = streetview_cache_path(lat, lon);
  if (cfg_.offline && !fs::exists(meta_path)) {
    ++misses_;
    // Imagery is optional downstream; offline absence is not an error.
    return {};
  }
  if (!cfg_.offline && cfg_.streetview_key.empty() && !fs::exists(meta_path)) return {};

  auto meta = cached(meta_path, "streetview", [&] {
    HttpRequest req;
    req.url = fmt::format("{}/metadata?location={:.6f},{:.6f}&key={}", cfg_.streetview_url, lat,
                          lon, url_encode(cfg_.streetview_key));
    auto res = call(std::move(req), streetview_limiter_, "streetview");
    auto j = json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::UpstreamUnavailable, "streetview: non-JSON body");
    return j;
  });
  if (meta.value("status", std::string{}) != "OK") return {};
  const auto pano = meta.value("pano_id", std::string{});
  if (pano.empty()) return {};
  const auto url = fmt::format("{}?size=640x640&pano={}", cfg_.streetview_url, url_encode(pano));

  if (cfg_.download_images && !cfg_.offline && !cfg_.streetview_key.empty()) {
    std::lock_guard lock(key_mutex(image.string()));
    HttpRequest req;
    req.url = url + "&key=" + url_encode(cfg_.streetview_key);
    auto res = call(std::move(req), streetview_limiter_, "streetview");
    write_text_file(image, res.body);
    return {image.string()};
  }
  return {url};
}

EnrichResult GeoIngestor::enrich(const LocationSample& sample) {
  require_valid_location(sample);
  EnrichResult out{sample, {}, {}};
  const double lat = sample.latitude;
  const double lon = sample.longitude;

  auto attempt = [&](const char* upstream, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      auto msg = "location '" + sample.id + "': " + upstream + " unavailable: " + e.what();
      log::warn(msg);
      out.warnings.push_back(std::move(msg));
      out.failed_upstreams.emplace_back(upstream);
    }
  };
  attempt("geocoder", [&] { out.sample.address = reverse_geocode(lat, lon); });
  attempt("pois", [&] { out.sample.pois = nearby_pois(lat, lon); });
  attempt("streetview", [&] { out.sample.streetview_refs = streetview_refs(lat, lon); });
  return out;
}

IngestStats GeoIngestor::stats() const noexcept {
  return {hits_.load(), misses_.load(), network_.load()};
}

}  // namespace urbanmas::geo
