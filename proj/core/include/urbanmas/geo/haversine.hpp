#pragma once

namespace urbanmas::geo {

inline constexpr double kEarthRadiusM = 6371008.8;

/// Great-circle distance in metres between two WGS84 points (degrees).
double haversine_m(double lat1, double lon1, double lat2, double lon2) noexcept;

}  // namespace urbanmas::geo
