#ifndef GEOEMBED_GEOINDEX_HPP
#define GEOEMBED_GEOINDEX_HPP

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geoembed/corpus.hpp"

namespace geoembed {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kKmPerDegree = kEarthRadiusKm * 3.14159265358979323846 / 180.0;

// Great-circle distance in km between two lat/lon points (degrees).
double haversine_km(double lat1, double lon1, double lat2, double lon2);

// Flat lat/lon grid over tag records. Cell edge is at least the query radius
// converted to degrees at the dataset's extreme latitude, so a radius query
// only needs the 3x3 cell neighbourhood. Immutable after construction.
class GridIndex {
public:
    GridIndex(const std::vector<TagRecord>& records, double radius_km);

    // All records with haversine distance <= radius_km of (lat, lon),
    // paired with their distance. Order unspecified.
    std::vector<std::pair<std::size_t, double>> records_within(double lat, double lon,
                                                               double radius_km) const;

    std::size_t size() const { return records_->size(); }

private:
    struct CellKey {
        long row, col;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        std::size_t operator()(const CellKey& k) const {
            return std::hash<long>()(k.row) * 1000003u ^ std::hash<long>()(k.col);
        }
    };

    CellKey cell_of(double lat, double lon) const;

    const std::vector<TagRecord>* records_;
    double cell_deg_;
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> buckets_;
};

}  // namespace geoembed

#endif
