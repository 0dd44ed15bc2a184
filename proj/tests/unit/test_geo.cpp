#include <doctest.h>

#include <random>

#include "doubles.hpp"
#include "oracles.hpp"
#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/geo/haversine.hpp"
#include "urbanmas/geo/ingest.hpp"
#include "urbanmas/logging.hpp"

using namespace urbanmas;
using namespace urbanmas::geo;

namespace {

constexpr double kLat = 35.6586, kLon = 139.7454;

IngestConfig fixture_cfg(bool offline = true) {
  IngestConfig c;
  c.cache_dir = testing::fixtures() / "geo_cache";
  c.offline = offline;
  c.upstream_spacing = std::chrono::milliseconds(0);
  return c;
}

// Routes by URL prefix; unrouted requests fail at the transport level.
class RoutingTransport final : public HttpTransport {
 public:
  std::map<std::string, HttpResponse> routes;
  std::atomic<int> calls{0};
  HttpResponse send(const HttpRequest& req) override {
    ++calls;
    for (const auto& [prefix, res] : routes)
      if (req.url.rfind(prefix, 0) == 0) return res;
    return {0, "", "unrouted"};
  }
};

const char* kGeocodeBody = R"({"display_name": "1 Example Road, Springfield"})";
const char* kOverpassBody = R"({"elements": [
  {"type": "node", "lat": 10.0009, "lon": 20.0, "tags": {"name": "Far Cafe", "amenity": "cafe"}},
  {"type": "node", "lat": 10.0001, "lon": 20.0, "tags": {"name": "Near Shop", "shop": "bakery"}},
  {"type": "way", "center": {"lat": 10.0, "lon": 20.0005}, "tags": {"name": "Mid Park", "leisure": "park"}},
  {"type": "node", "lat": 10.05, "lon": 20.0, "tags": {"name": "Outside", "amenity": "bank"}},
  {"type": "node", "lat": 10.0002, "lon": 20.0, "tags": {}}
]})";

}  // namespace

TEST_CASE("haversine agrees with the spherical cosine oracle") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 180.0);
  for (int i = 0; i < 500; ++i) {
    const double a = lat(rng), b = lon(rng), c = lat(rng), d = lon(rng);
    const double h = haversine_m(a, b, c, d);
    const double o = oracle::great_circle_m(a, b, c, d);
    // The cosine form loses precision for tiny separations; compare absolutely.
    CHECK(std::abs(h - o) < 1e-3 + 1e-9 * o);
    CHECK(h == haversine_m(c, d, a, b));
  }
  CHECK(haversine_m(kLat, kLon, kLat, kLon) == 0.0);
  CHECK(haversine_m(0, 0, 0, 1e-7) > 0.0);
  // A quarter of the meridian.
  CHECK(haversine_m(0, 0, 90, 0) == doctest::Approx(kEarthRadiusM * 3.14159265358979323846 / 2));
}

TEST_CASE("cache key rounds to five decimals") {
  CHECK(cache_key(35.6586, 139.7454) == "35.65860_139.74540");
  CHECK(cache_key(-1.234567, 2.0) == "-1.23457_2.00000");
}

TEST_CASE("cached geocode needs no network") {
  auto transport = std::make_shared<testing::FailingTransport>();
  GeoIngestor geo(fixture_cfg(false), transport);
  const auto address = geo.reverse_geocode(kLat, kLon);
  CHECK(address.find("Tokyo") != std::string::npos);
  CHECK(transport->attempts == 0);
  CHECK(geo.stats().cache_hits == 1);
}

TEST_CASE("fixture POIs match the haversine oracle") {
  auto transport = std::make_shared<testing::FailingTransport>();
  GeoIngestor geo(fixture_cfg(), transport);
  const auto pois = geo.nearby_pois(kLat, kLon);

  // Expected list derived independently from the raw fixture.
  const auto raw = nlohmann::json::parse(
      read_text_file(testing::fixtures() / "geo_cache/pois/35.65860_139.74540_r300.json"));
  std::vector<std::pair<double, std::string>> expected;
  for (const auto& el : raw["elements"]) {
    const double d = oracle::great_circle_m(kLat, kLon, el["lat"], el["lon"]);
    if (d <= 300.0) expected.emplace_back(d, el["tags"]["name"]);
  }
  std::sort(expected.begin(), expected.end());
  REQUIRE(expected.size() == 3);
  REQUIRE(pois.size() == expected.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    CHECK(pois[i].name == expected[i].second);
    CHECK(std::abs(pois[i].distance_m - expected[i].first) < 1e-2);
    CHECK(pois[i].distance_m <= 300.0);
  }
  CHECK(pois[0].name == "Tokyo Tower");
  CHECK(transport->attempts == 0);
}

TEST_CASE("fixture street view references") {
  auto transport = std::make_shared<testing::FailingTransport>();
  GeoIngestor geo(fixture_cfg(), transport);
  const auto refs = geo.streetview_refs(kLat, kLon);
  REQUIRE(refs.size() == 1);
  CHECK(refs[0].find("pano=CAoSLEFGMVFpcE1fdG9reW8") != std::string::npos);
  CHECK(geo.streetview_refs(47.6806, -122.3287).empty());
  CHECK(transport->attempts == 0);
}

TEST_CASE("offline street view prefers a cached image") {
  testing::TempDir dir;
  auto cfg = fixture_cfg();
  cfg.cache_dir = dir.path();
  GeoIngestor geo(cfg, std::make_shared<testing::FailingTransport>());
  CHECK(geo.streetview_refs(1.0, 2.0).empty());
  write_text_file(geo.streetview_image_path(1.0, 2.0), "jpeg bytes");
  CHECK(geo.streetview_refs(1.0, 2.0) ==
        std::vector<std::string>{geo.streetview_image_path(1.0, 2.0).string()});
}

TEST_CASE("offline miss is an error") {
  testing::TempDir dir;
  auto cfg = fixture_cfg();
  cfg.cache_dir = dir.path();
  auto transport = std::make_shared<testing::FailingTransport>();
  GeoIngestor geo(cfg, transport);
  try {
    geo.reverse_geocode(1.0, 2.0);
    FAIL("expected OfflineMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OfflineMiss);
  }
  CHECK_THROWS_AS(geo.nearby_pois(1.0, 2.0), Error);
  CHECK(transport->attempts == 0);
}

TEST_CASE("online fetches are cached for the next call") {
  testing::TempDir dir;
  auto cfg = fixture_cfg(false);
  cfg.cache_dir = dir.path();
  auto transport = std::make_shared<RoutingTransport>();
  transport->routes[cfg.geocoder_url] = {200, kGeocodeBody, ""};
  transport->routes[cfg.overpass_url] = {200, kOverpassBody, ""};
  {
    GeoIngestor geo(cfg, transport);
    CHECK(geo.reverse_geocode(10.0, 20.0) == "1 Example Road, Springfield");
    const auto pois = geo.nearby_pois(10.0, 20.0);
    REQUIRE(pois.size() == 3);
    CHECK(pois[0].name == "Near Shop");
    CHECK(pois[0].category == "shop=bakery");
    CHECK(pois[1].name == "Mid Park");
    CHECK(pois[2].name == "Far Cafe");
    CHECK(std::is_sorted(pois.begin(), pois.end(),
                         [](auto& a, auto& b) { return a.distance_m < b.distance_m; }));
    CHECK(geo.stats().network_calls == 2);
    CHECK(geo.stats().cache_misses == 2);
  }
  transport->calls = 0;
  GeoIngestor again(cfg, transport);
  again.reverse_geocode(10.0, 20.0);
  again.nearby_pois(10.0, 20.0);
  CHECK(transport->calls == 0);
  CHECK(again.stats().hit_rate() == 1.0);

  cfg.poi_limit = 1;
  GeoIngestor limited(cfg, transport);
  CHECK(limited.nearby_pois(10.0, 20.0).size() == 1);
}

TEST_CASE("empty upstream result is a valid empty list") {
  testing::TempDir dir;
  auto cfg = fixture_cfg(false);
  cfg.cache_dir = dir.path();
  auto transport = std::make_shared<RoutingTransport>();
  transport->routes[cfg.overpass_url] = {200, R"({"elements": []})", ""};
  GeoIngestor geo(cfg, transport);
  CHECK(geo.nearby_pois(10.0, 20.0).empty());
}

TEST_CASE("enrich degrades a failing upstream to a warning") {
  testing::TempDir dir;
  auto cfg = fixture_cfg(false);
  cfg.cache_dir = dir.path();
  auto transport = std::make_shared<RoutingTransport>();
  transport->routes[cfg.geocoder_url] = {200, kGeocodeBody, ""};
  transport->routes[cfg.overpass_url] = {503, "", ""};
  GeoIngestor geo(cfg, transport);
  log::Capture capture;
  const auto out = geo.enrich({"s", 10.0, 20.0, "Springfield", {}, {}, {}, {}});
  CHECK(out.sample.address == "1 Example Road, Springfield");
  CHECK(out.sample.pois.empty());
  CHECK(out.failed_upstreams == std::vector<std::string>{"pois"});
  CHECK(out.warnings.size() == 1);
  CHECK(capture.contains("pois unavailable"));
}

TEST_CASE("enrich from fixtures populates every field and is idempotent") {
  auto transport = std::make_shared<testing::FailingTransport>();
  GeoIngestor geo(fixture_cfg(), transport);
  const auto samples = load_dataset(testing::fixtures() / "dataset.jsonl");
  const auto first = geo.enrich(samples[0]);
  CHECK(first.warnings.empty());
  CHECK(first.sample.address.has_value());
  CHECK(first.sample.pois.size() == 3);
  CHECK(first.sample.streetview_refs.size() == 1);
  CHECK(geo.enrich(first.sample).sample == first.sample);
  CHECK(transport->attempts == 0);
}

TEST_CASE("invalid ingest settings") {
  auto cfg = fixture_cfg();
  cfg.poi_radius_m = 0;
  CHECK_THROWS_AS(GeoIngestor(cfg, std::make_shared<testing::FailingTransport>()), Error);
  GeoIngestor geo(fixture_cfg(), std::make_shared<testing::FailingTransport>());
  CHECK_THROWS_AS(geo.reverse_geocode(95.0, 0.0), Error);
}

TEST_CASE("upstream spacing is enforced through the sleep seam") {
  testing::TempDir dir;
  auto cfg = fixture_cfg(false);
  cfg.cache_dir = dir.path();
  cfg.upstream_spacing = std::chrono::milliseconds(1000);
  auto transport = std::make_shared<RoutingTransport>();
  transport->routes[cfg.geocoder_url] = {200, kGeocodeBody, ""};
  testing::FakeClock clock;
  GeoIngestor geo(cfg, transport, clock.now(), clock.sleep());
  geo.reverse_geocode(1.0, 1.0);
  geo.reverse_geocode(2.0, 2.0);
  REQUIRE(clock.sleeps.size() == 1);
  CHECK(clock.sleeps[0] == std::chrono::milliseconds(1000));
}
