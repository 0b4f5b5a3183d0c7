#include "geoembed/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "geoembed/util.hpp"

namespace geoembed {

namespace {

bool coords_ok(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open file: " + path);
    return in;
}

bool is_comment_or_blank(const std::string& line) {
    return line.empty() || line[0] == '#';
}

}  // namespace

std::vector<TagRecord> load_tag_records(const std::string& path, LoadStats* stats) {
    std::ifstream in = open_or_throw(path);
    LoadStats st;
    std::vector<TagRecord> out;
    // dedup key: (user, tag, lat, lon); "same location" is exact parsed equality
    std::set<std::tuple<std::string, std::string, double, double>> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_comment_or_blank(line)) continue;
        ++st.lines_total;
        auto fields = split(line, '\t');
        double lat, lon;
        if (fields.size() < 5 || !parse_double(fields[2], lat) || !parse_double(fields[3], lon) ||
            !coords_ok(lat, lon)) {
            ++st.lines_malformed;
            continue;
        }
        bool any_tag = false;
        for (const auto& raw_tag : split(fields[4], ',')) {
            std::string tag = normalize_tag(raw_tag);
            if (tag.empty()) continue;
            any_tag = true;
            auto key = std::make_tuple(fields[1], tag, lat, lon);
            if (!seen.insert(key).second) {
                ++st.duplicates_collapsed;
                continue;
            }
            out.push_back(TagRecord{fields[0], fields[1], std::move(tag), lat, lon});
            ++st.records_emitted;
        }
        if (!any_tag) ++st.lines_malformed;
    }
    if (st.lines_total > 0 && st.lines_malformed * 2 > st.lines_total) {
        throw ValidationError("more than 50% malformed lines in " + path + " (" +
                              std::to_string(st.lines_malformed) + "/" +
                              std::to_string(st.lines_total) + ")");
    }
    if (stats) *stats = st;
    return out;
}

LocationSet load_locations(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    LocationSet ls;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_comment_or_blank(line)) continue;
        auto fields = split(line, '\t');
        double lat, lon;
        if (fields.size() < 3 || !parse_double(fields[1], lat) || !parse_double(fields[2], lon))
            throw ValidationError(path + ":" + std::to_string(lineno) + ": bad location line");
        if (!coords_ok(lat, lon))
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": coordinates out of bounds");
        if (ls.index_of.count(fields[0]))
            throw ValidationError(path + ": duplicate loc_id " + fields[0]);
        ls.index_of[fields[0]] = ls.locations.size();
        ls.locations.push_back(Location{fields[0], lat, lon});
    }
    return ls;
}

void NumericalFeatureTable::normalize(const std::vector<std::size_t>& train_rows) {
    const std::size_t nf = n_features();
    means.assign(nf, 0.0);
    stddevs.assign(nf, 0.0);
    if (train_rows.empty()) throw ValidationError("empty training split for z-score");
    for (std::size_t k = 0; k < nf; ++k) {
        double sum = 0.0;
        for (std::size_t r : train_rows) sum += values[r][k];
        const double mu = sum / static_cast<double>(train_rows.size());
        double ss = 0.0;
        for (std::size_t r : train_rows) {
            const double d = values[r][k] - mu;
            ss += d * d;
        }
        means[k] = mu;
        stddevs[k] = std::sqrt(ss / static_cast<double>(train_rows.size()));  // population
    }
    normalized.assign(values.size(), std::vector<double>(nf, 0.0));
    for (std::size_t r = 0; r < values.size(); ++r)
        for (std::size_t k = 0; k < nf; ++k)
            normalized[r][k] = stddevs[k] > 0.0 ? (values[r][k] - means[k]) / stddevs[k] : 0.0;
}

NumericalFeatureTable load_numerical_features(const std::string& path, const LocationSet& locs) {
    std::ifstream in = open_or_throw(path);
    NumericalFeatureTable t;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty feature file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line, '\t');
    if (header.size() < 2) throw ValidationError(path + ": header must name at least one feature");
    t.feature_names.assign(header.begin() + 1, header.end());
    t.values.assign(locs.size(), {});
    std::vector<std::string> unknown;
    std::vector<bool> filled(locs.size(), false);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_comment_or_blank(line)) continue;
        auto fields = split(line, '\t');
        auto it = locs.index_of.find(fields[0]);
        if (it == locs.index_of.end()) {
            if (unknown.size() < 10) unknown.push_back(fields[0]);
            continue;
        }
        if (fields.size() != t.feature_names.size() + 1)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": missing feature value for " + fields[0]);
        std::vector<double> row(t.feature_names.size());
        for (std::size_t k = 0; k < row.size(); ++k)
            if (!parse_double(fields[k + 1], row[k]))
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": missing feature value for " + fields[0]);
        t.values[it->second] = std::move(row);
        filled[it->second] = true;
    }
    if (!unknown.empty()) {
        std::string msg = path + ": unknown loc_ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw ValidationError(msg);
    }
    for (std::size_t i = 0; i < locs.size(); ++i)
        if (!filled[i])
            throw ValidationError(path + ": missing feature row for " + locs.locations[i].loc_id);
    return t;
}

std::vector<CategoryAssignment> load_categories(const std::string& path, const LocationSet& locs) {
    std::ifstream in = open_or_throw(path);
    std::map<std::string, CategoryAssignment> by_taxonomy;
    std::map<std::string, std::map<std::size_t, std::string>> assigned;  // taxonomy -> loc -> cat
    std::vector<std::string> unknown;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_comment_or_blank(line)) continue;
        auto fields = split(line, '\t');
        if (fields.size() < 3)
            throw ValidationError(path + ":" + std::to_string(lineno) + ": bad category line");
        auto it = locs.index_of.find(fields[2]);
        if (it == locs.index_of.end()) {
            if (unknown.size() < 10) unknown.push_back(fields[2]);
            continue;
        }
        auto& prev = assigned[fields[0]];
        auto [pit, inserted] = prev.emplace(it->second, fields[1]);
        if (!inserted && pit->second != fields[1])
            throw ValidationError(path + ": location " + fields[2] +
                                  " assigned to two categories of taxonomy " + fields[0]);
        auto& tax = by_taxonomy[fields[0]];
        tax.taxonomy_id = fields[0];
        tax.members[fields[1]].insert(it->second);
    }
    if (!unknown.empty()) {
        std::string msg = path + ": unknown loc_ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw ValidationError(msg);
    }
    std::vector<CategoryAssignment> out;
    out.reserve(by_taxonomy.size());
    for (auto& [_, tax] : by_taxonomy) out.push_back(std::move(tax));
    return out;
}

}  // namespace geoembed
