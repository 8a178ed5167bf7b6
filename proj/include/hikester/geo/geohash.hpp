#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hikester/core/model.hpp"

namespace hikester::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr int kMaxPrecision = 12;
inline constexpr std::string_view kBase32 = "0123456789bcdefghjkmnpqrstuvwxyz";

class InvalidGeohash : public std::invalid_argument {
 public:
  InvalidGeohash() : std::invalid_argument("invalid geohash") {}
};

struct BoundingBox {
  double lat_min, lat_max, lon_min, lon_max;

  GeoPoint center() const { return {(lat_min + lat_max) / 2.0, (lon_min + lon_max) / 2.0}; }
  /// Closed on every side.
  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Interleaved lon/lat bisection, lon first. `precision` in [1, 12].
std::string encode_geohash(const GeoPoint& p, int precision);

/// Exact cell bounds. Throws InvalidGeohash for empty, too long, or
/// non-base32 input.
BoundingBox decode_geohash(std::string_view code);

/// Cell height and width in degrees at `precision`.
struct CellSize {
  double lat_deg;
  double lon_deg;
};
CellSize cell_size(int precision);

/// Adjacent cell at the same precision; lon wraps across the antimeridian,
/// nullopt past a pole.
std::optional<std::string> neighbor(std::string_view code, int dlat, int dlon);

struct RadiusCover {
  /// Set when no geohash cover applies (pole inside the disc, or the disc
  /// is wider than a precision-1 cell): callers must scan everything.
  bool full_scan = false;
  int precision = 0;
  std::vector<std::string> cells;
};

/// Cells whose union contains the radius_km disc around `center`: the
/// finest precision whose cell spans at least twice the disc's extent in
/// both axes, then that cell with its eight neighbours.
RadiusCover cover_radius(const GeoPoint& center, double radius_km);

}  // namespace hikester::geo
