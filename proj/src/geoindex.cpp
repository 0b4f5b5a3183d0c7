#include "geoembed/geoindex.hpp"

#include <algorithm>
#include <cmath>

namespace geoembed {

namespace {
constexpr double kPi = 3.14159265358979323846;
double deg2rad(double d) { return d * kPi / 180.0; }
}  // namespace

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    if (lat1 == lat2 && lon1 == lon2) return 0.0;
    const double phi1 = deg2rad(lat1);
    const double phi2 = deg2rad(lat2);
    const double dphi = deg2rad(lat2 - lat1);
    const double dlam = deg2rad(lon2 - lon1);
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

GridIndex::GridIndex(const std::vector<TagRecord>& records, double radius_km)
    : records_(&records) {
    double max_abs_lat = 0.0;
    for (const auto& r : records) max_abs_lat = std::max(max_abs_lat, std::abs(r.lat));
    // cell edge >= radius in degrees at the extreme latitude of the data
    const double cos_ext = std::max(std::cos(deg2rad(max_abs_lat)), 1e-3);
    cell_deg_ = std::max(radius_km / (kKmPerDegree * cos_ext), 1e-9);
    for (std::size_t i = 0; i < records.size(); ++i)
        buckets_[cell_of(records[i].lat, records[i].lon)].push_back(i);
}

GridIndex::CellKey GridIndex::cell_of(double lat, double lon) const {
    return CellKey{static_cast<long>(std::floor(lat / cell_deg_)),
                   static_cast<long>(std::floor(lon / cell_deg_))};
}

std::vector<std::pair<std::size_t, double>> GridIndex::records_within(double lat, double lon,
                                                                      double radius_km) const {
    std::vector<std::pair<std::size_t, double>> out;
    const double rlat_deg = radius_km / kKmPerDegree;
    const double band = std::min(std::abs(lat) + rlat_deg, 89.9);
    const double rlon_deg = radius_km / (kKmPerDegree * std::cos(deg2rad(band)));
    const long r0 = static_cast<long>(std::floor((lat - rlat_deg) / cell_deg_)) - 1;
    const long r1 = static_cast<long>(std::floor((lat + rlat_deg) / cell_deg_)) + 1;
    const long c0 = static_cast<long>(std::floor((lon - rlon_deg) / cell_deg_)) - 1;
    const long c1 = static_cast<long>(std::floor((lon + rlon_deg) / cell_deg_)) + 1;
    for (long row = r0; row <= r1; ++row) {
        for (long col = c0; col <= c1; ++col) {
            auto it = buckets_.find(CellKey{row, col});
            if (it == buckets_.end()) continue;
            for (std::size_t idx : it->second) {
                const auto& rec = (*records_)[idx];
                const double d = haversine_km(lat, lon, rec.lat, rec.lon);
                // the boundary is inclusive; the relative slack covers the few
                // ulps of rounding in the trig, so a record at analytically
                // exact distance D is never dropped
                if (d <= radius_km * (1.0 + 1e-12)) out.emplace_back(idx, d);
            }
        }
    }
    return out;
}

}  // namespace geoembed
