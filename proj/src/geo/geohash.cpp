#include "hikester/geo/geohash.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace hikester::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

int base32_index(char c) {
  auto pos = kBase32.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  double lat1 = a.lat * kDegToRad;
  double lat2 = b.lat * kDegToRad;
  double dlat = lat2 - lat1;
  double dlon = (b.lon - a.lon) * kDegToRad;
  double s1 = std::sin(dlat / 2.0);
  double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::string encode_geohash(const GeoPoint& p, int precision) {
  if (precision < 1 || precision > kMaxPrecision) throw std::invalid_argument("geohash precision must be 1..12");
  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  std::string out;
  out.reserve(static_cast<std::size_t>(precision));
  bool even = true;  // lon bit
  int bit = 0;
  int ch = 0;
  while (static_cast<int>(out.size()) < precision) {
    if (even) {
      double mid = (lon_lo + lon_hi) / 2.0;
      if (p.lon >= mid) {
        ch = (ch << 1) | 1;
        lon_lo = mid;
      } else {
        ch <<= 1;
        lon_hi = mid;
      }
    } else {
      double mid = (lat_lo + lat_hi) / 2.0;
      if (p.lat >= mid) {
        ch = (ch << 1) | 1;
        lat_lo = mid;
      } else {
        ch <<= 1;
        lat_hi = mid;
      }
    }
    even = !even;
    if (++bit == 5) {
      out.push_back(kBase32[static_cast<std::size_t>(ch)]);
      bit = 0;
      ch = 0;
    }
  }
  return out;
}

BoundingBox decode_geohash(std::string_view code) {
  if (code.empty() || code.size() > static_cast<std::size_t>(kMaxPrecision)) throw InvalidGeohash();
  BoundingBox box{-90.0, 90.0, -180.0, 180.0};
  bool even = true;
  for (char c : code) {
    int idx = base32_index(c);
    if (idx < 0) throw InvalidGeohash();
    for (int b = 4; b >= 0; --b) {
      bool set = ((idx >> b) & 1) != 0;
      if (even) {
        double mid = (box.lon_min + box.lon_max) / 2.0;
        (set ? box.lon_min : box.lon_max) = mid;
      } else {
        double mid = (box.lat_min + box.lat_max) / 2.0;
        (set ? box.lat_min : box.lat_max) = mid;
      }
      even = !even;
    }
  }
  return box;
}

CellSize cell_size(int precision) {
  int bits = 5 * precision;
  int lon_bits = (bits + 1) / 2;
  int lat_bits = bits / 2;
  return {180.0 / std::ldexp(1.0, lat_bits), 360.0 / std::ldexp(1.0, lon_bits)};
}

std::optional<std::string> neighbor(std::string_view code, int dlat, int dlon) {
  auto box = decode_geohash(code);
  auto size = cell_size(static_cast<int>(code.size()));
  auto c = box.center();
  double lat = c.lat + dlat * size.lat_deg;
  if (lat <= -90.0 || lat >= 90.0) return std::nullopt;
  double lon = normalize_longitude(c.lon + dlon * size.lon_deg);
  return encode_geohash({lat, lon}, static_cast<int>(code.size()));
}

RadiusCover cover_radius(const GeoPoint& center, double radius_km) {
  RadiusCover cover;
  if (!(radius_km > 0.0)) throw std::invalid_argument("radius_km must be positive");
  // Padding absorbs rounding in the bounding-box trigonometry.
  constexpr double kPad = 1.0 + 1e-9;
  double angular = radius_km / kEarthRadiusKm;
  if (angular >= std::numbers::pi / 2.0) {
    cover.full_scan = true;
    return cover;
  }
  double dlat_deg = angular / kDegToRad * kPad;
  if (center.lat + dlat_deg >= 90.0 || center.lat - dlat_deg <= -90.0) {
    cover.full_scan = true;
    return cover;
  }
  // Exact longitudinal half-extent of a spherical cap that excludes the poles.
  double ratio = std::sin(angular) / std::cos(center.lat * kDegToRad);
  if (ratio >= 1.0) {
    cover.full_scan = true;
    return cover;
  }
  double dlon_deg = std::asin(ratio) / kDegToRad * kPad;

  int precision = 0;
  for (int p = kMaxPrecision; p >= 1; --p) {
    auto size = cell_size(p);
    if (size.lat_deg >= 2.0 * dlat_deg && size.lon_deg >= 2.0 * dlon_deg) {
      precision = p;
      break;
    }
  }
  if (precision == 0) {
    cover.full_scan = true;
    return cover;
  }

  auto middle = encode_geohash(center, precision);
  std::set<std::string> cells;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      auto cell = (dx == 0 && dy == 0) ? std::optional<std::string>(middle) : neighbor(middle, dy, dx);
      if (!cell) {
        cover.full_scan = true;
        cover.cells.clear();
        return cover;
      }
      cells.insert(*cell);
    }
  }
  cover.precision = precision;
  cover.cells.assign(cells.begin(), cells.end());
  return cover;
}

}  // namespace hikester::geo
