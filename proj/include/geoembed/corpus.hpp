#ifndef GEOEMBED_CORPUS_HPP
#define GEOEMBED_CORPUS_HPP

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace geoembed {

// One geotagged tag occurrence. Duplicate (user, tag, lat, lon) tuples are
// collapsed at load, so each record stands for a distinct user using the tag
// at that exact point.
struct TagRecord {
    std::string record_id;
    std::string user_id;
    std::string tag;  // normalized: lowercased, trimmed
    double lat = 0.0;
    double lon = 0.0;
};

struct Location {
    std::string loc_id;
    double lat = 0.0;
    double lon = 0.0;
};

struct LocationSet {
    std::vector<Location> locations;
    std::unordered_map<std::string, std::size_t> index_of;  // loc_id -> index
    std::size_t size() const { return locations.size(); }
};

struct LoadStats {
    std::size_t lines_total = 0;
    std::size_t lines_malformed = 0;
    std::size_t records_emitted = 0;
    std::size_t duplicates_collapsed = 0;
};

// Per-location dense feature rows with z-score statistics.
// normalize() computes population mean/stddev over the given training rows
// and applies them to all rows; zero-variance columns normalize to zero.
struct NumericalFeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> values;      // [location][feature], raw
    std::vector<std::vector<double>> normalized;  // filled by normalize()
    std::vector<double> means;
    std::vector<double> stddevs;

    void normalize(const std::vector<std::size_t>& train_rows);
    std::size_t n_features() const { return feature_names.size(); }
};

// One taxonomy's category -> member locations map. Categories within a
// taxonomy are mutually exclusive over locations.
struct CategoryAssignment {
    std::string taxonomy_id;
    std::map<std::string, std::set<std::size_t>> members;  // category_id -> loc indices
};

std::vector<TagRecord> load_tag_records(const std::string& path, LoadStats* stats = nullptr);

LocationSet load_locations(const std::string& path);

NumericalFeatureTable load_numerical_features(const std::string& path, const LocationSet& locs);

std::vector<CategoryAssignment> load_categories(const std::string& path, const LocationSet& locs);

}  // namespace geoembed

#endif
