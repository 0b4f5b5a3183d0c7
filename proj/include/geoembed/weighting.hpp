#ifndef GEOEMBED_WEIGHTING_HPP
#define GEOEMBED_WEIGHTING_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoembed/corpus.hpp"
#include "geoembed/geoindex.hpp"

namespace geoembed {

// Weights below this are dropped from the sparse matrix; Gaussian tails
// produce denormal noise with no effect at reported precision.
inline constexpr double kMinTagWeight = 1e-12;

// Sparse location x tag matrix of Gaussian-smoothed weights w(t,l), the
// distance-thresholded distinct-user counts, and PPMI scores derived from
// the w marginals. Zeros are implicit: stored entries have w > 0.
struct AssociationMatrix {
    struct Entry {
        std::uint32_t tag;   // index into tags
        double w;            // smoothed weight, > 0
        double ppmi;         // max(0, log(p_tl / (p_t p_l))), natural log
        std::uint32_t count; // distinct users with the tag within D, unweighted
    };

    std::vector<std::string> loc_ids;
    std::vector<std::string> tags;
    std::unordered_map<std::string, std::uint32_t> tag_index;
    std::vector<std::vector<Entry>> rows;  // per location, sorted by tag index

    std::vector<double> tag_weight_sum;  // per tag, over all locations
    std::vector<double> loc_weight_sum;  // per location, over all tags
    double total_weight = 0.0;           // N

    std::size_t n_locations() const { return loc_ids.size(); }
    std::size_t n_tags() const { return tags.size(); }
    std::size_t nnz() const;

    // Indices of locations with no tags within range (all-zero rows).
    std::vector<std::size_t> empty_rows() const;

    void dump_tsv(const std::string& path, const std::string& header = "") const;
};

// w(t,l) = sum over deduped records r with tag t and d(l,r) <= D of
// exp(-d^2/(2 sigma^2)). Each record is one distinct user.
double tag_weight(const std::vector<TagRecord>& records, const GridIndex& index,
                  const std::string& tag, double lat, double lon, double radius_km,
                  double sigma_km);

// max_vocab = 0 keeps the full vocabulary; otherwise the top max_vocab tags
// by total weight are retained (ties by tag) before PPMI is computed.
AssociationMatrix build_association_matrix(const std::vector<TagRecord>& records,
                                           const LocationSet& locs, double radius_km,
                                           double sigma_km, std::size_t max_vocab = 0);

}  // namespace geoembed

#endif
