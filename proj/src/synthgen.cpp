#include "geoembed/synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "geoembed/geoindex.hpp"
#include "geoembed/util.hpp"

namespace geoembed {

namespace {
constexpr double kPlantedLatCoef = 2.0;
constexpr double kPlantedLonCoef = 3.0;
constexpr double kPlantedOffset = 1.0;
}  // namespace

SynthOutput generate_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.n_clusters == 0) throw ValidationError("synthgen: need at least one cluster");
    if (cfg.n_locations == 0) throw ValidationError("synthgen: need at least one location");
    if (cfg.tags_per_cluster == 0) throw ValidationError("synthgen: need cluster tags");
    if (cfg.signal_fraction < 0.0 || cfg.signal_fraction > 1.0)
        throw ValidationError("synthgen: signal_fraction must be in [0,1]");
    if (cfg.n_users == 0) throw ValidationError("synthgen: need at least one user");

    std::filesystem::create_directories(out_dir);
    std::mt19937_64 rng(cfg.seed);

    // centroids on a square grid over the extent box
    const auto grid = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(cfg.n_clusters))));
    std::vector<std::pair<double, double>> centroids;
    for (std::size_t k = 0; k < cfg.n_clusters; ++k) {
        const double fx = grid > 1 ? static_cast<double>(k % grid) / (grid - 1) : 0.5;
        const double fy = grid > 1 ? static_cast<double>(k / grid) / (grid - 1) : 0.5;
        centroids.emplace_back(cfg.center_lat + (fy - 0.5) * cfg.extent_deg,
                               cfg.center_lon + (fx - 0.5) * cfg.extent_deg);
    }

    const double jitter_deg = cfg.jitter_km / kKmPerDegree;
    std::normal_distribution<double> jitter(0.0, jitter_deg);
    std::normal_distribution<double> rec_jitter(0.0, jitter_deg / 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> user_pick(0, cfg.n_users - 1);
    std::uniform_int_distribution<std::size_t> ctag_pick(0, cfg.tags_per_cluster - 1);

    struct Loc {
        std::string id;
        double lat, lon;
        std::size_t cluster;
    };
    std::vector<Loc> locs;
    for (std::size_t i = 0; i < cfg.n_locations; ++i) {
        const std::size_t k = i % cfg.n_clusters;
        locs.push_back({"loc" + std::to_string(i),
                        centroids[k].first + jitter(rng),
                        centroids[k].second + jitter(rng), k});
    }

    SynthOutput out;
    out.records_path = out_dir + "/records.tsv";
    out.locations_path = out_dir + "/locations.tsv";
    out.features_path = out_dir + "/features.tsv";
    out.categories_path = out_dir + "/categories.tsv";
    out.truth_path = out_dir + "/truth.tsv";

    std::ofstream rec(out.records_path, std::ios::binary);
    std::size_t rec_id = 0;
    for (const auto& l : locs) {
        for (std::size_t r = 0; r < cfg.records_per_location; ++r) {
            std::string tag;
            if (cfg.noise_tags > 0 && unit(rng) >= cfg.signal_fraction) {
                std::uniform_int_distribution<std::size_t> noise_pick(0, cfg.noise_tags - 1);
                tag = "noise_t" + std::to_string(noise_pick(rng));
            } else {
                tag = "c" + std::to_string(l.cluster) + "_t" + std::to_string(ctag_pick(rng));
            }
            rec << "p" << rec_id++ << '\t' << "u" << user_pick(rng) << '\t'
                << fmt_double(l.lat + rec_jitter(rng)) << '\t'
                << fmt_double(l.lon + rec_jitter(rng)) << '\t' << tag << '\n';
        }
    }
    rec.close();

    std::ofstream lf(out.locations_path, std::ios::binary);
    for (const auto& l : locs)
        lf << l.id << '\t' << fmt_double(l.lat) << '\t' << fmt_double(l.lon) << '\n';
    lf.close();

    std::ofstream ff(out.features_path, std::ios::binary);
    ff << "loc_id\tplanted\n";
    for (const auto& l : locs) {
        const auto& c = centroids[l.cluster];
        ff << l.id << '\t'
           << fmt_double(kPlantedLatCoef * c.first + kPlantedLonCoef * c.second + kPlantedOffset)
           << '\n';
    }
    ff.close();

    std::ofstream cf(out.categories_path, std::ios::binary);
    for (const auto& l : locs)
        cf << "cluster\tk" << l.cluster << '\t' << l.id << '\n';
    cf.close();

    std::ofstream tf(out.truth_path, std::ios::binary);
    for (const auto& l : locs) tf << l.id << '\t' << "k" << l.cluster << '\n';
    tf.close();
    return out;
}

std::vector<std::pair<std::string, std::string>> load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open truth file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() != 2) throw ValidationError(path + ": bad truth line");
        out.emplace_back(f[0], f[1]);
    }
    return out;
}

}  // namespace geoembed
