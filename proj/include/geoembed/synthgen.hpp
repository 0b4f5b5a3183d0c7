#ifndef GEOEMBED_SYNTHGEN_HPP
#define GEOEMBED_SYNTHGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace geoembed {

// Seeded synthetic corpus with planted structure: disjoint per-cluster tag
// vocabularies, a numerical feature that is a linear function of the cluster
// centroid coordinates, and categories equal to the cluster ids.
struct SynthConfig {
    std::size_t n_locations = 200;
    std::size_t n_clusters = 4;
    std::size_t tags_per_cluster = 20;
    std::size_t noise_tags = 20;
    std::size_t records_per_location = 30;
    std::size_t n_users = 50;
    double center_lat = 50.0;
    double center_lon = 5.0;
    double extent_deg = 2.0;       // clusters spread over this box
    double jitter_km = 0.3;        // location scatter around its centroid
    double signal_fraction = 0.8;  // cluster-vocab share of each draw
    std::uint64_t seed = 1;
};

struct SynthOutput {
    std::string records_path, locations_path, features_path, categories_path, truth_path;
};

// Writes records.tsv, locations.tsv, features.tsv, categories.tsv and
// truth.tsv (loc_id<TAB>cluster_id) under out_dir. Byte-identical for
// identical configs.
SynthOutput generate_synthetic(const SynthConfig& cfg, const std::string& out_dir);

// truth.tsv reader: cluster index per loc_id
std::vector<std::pair<std::string, std::string>> load_truth(const std::string& path);

}  // namespace geoembed

#endif
