#include "geoembed/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "geoembed/util.hpp"

namespace geoembed {

std::size_t AssociationMatrix::nnz() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += row.size();
    return n;
}

std::vector<std::size_t> AssociationMatrix::empty_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].empty()) out.push_back(i);
    return out;
}

void AssociationMatrix::dump_tsv(const std::string& path, const std::string& header) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    if (!header.empty()) out << header << "\n";
    std::vector<std::size_t> order(loc_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return loc_ids[a] < loc_ids[b]; });
    for (std::size_t li : order) {
        std::vector<const Entry*> entries;
        entries.reserve(rows[li].size());
        for (const auto& e : rows[li]) entries.push_back(&e);
        std::sort(entries.begin(), entries.end(),
                  [&](const Entry* a, const Entry* b) { return tags[a->tag] < tags[b->tag]; });
        for (const Entry* e : entries)
            out << loc_ids[li] << '\t' << tags[e->tag] << '\t' << fmt_double(e->w) << '\t'
                << fmt_double(e->ppmi) << '\n';
    }
}

double tag_weight(const std::vector<TagRecord>& records, const GridIndex& index,
                  const std::string& tag, double lat, double lon, double radius_km,
                  double sigma_km) {
    const double denom = 2.0 * sigma_km * sigma_km;
    double w = 0.0;
    for (const auto& [idx, d] : index.records_within(lat, lon, radius_km))
        if (records[idx].tag == tag) w += std::exp(-(d * d) / denom);
    return w;
}

AssociationMatrix build_association_matrix(const std::vector<TagRecord>& records,
                                           const LocationSet& locs, double radius_km,
                                           double sigma_km, std::size_t max_vocab) {
    if (records.empty()) throw ValidationError("empty tag corpus");
    if (locs.size() == 0) throw ValidationError("empty location set");

    GridIndex index(records, radius_km);
    const double denom = 2.0 * sigma_km * sigma_km;

    // raw per-location accumulation keyed by tag string; vocabulary is fixed
    // afterwards so tag indices are stable
    struct RawCell {
        double w = 0.0;
        std::uint32_t count = 0;
    };
    std::vector<std::map<std::string, RawCell>> raw(locs.size());
    std::map<std::string, double> vocab_weight;
    for (std::size_t li = 0; li < locs.size(); ++li) {
        const auto& loc = locs.locations[li];
        for (const auto& [idx, d] : index.records_within(loc.lat, loc.lon, radius_km)) {
            auto& cell = raw[li][records[idx].tag];
            cell.w += std::exp(-(d * d) / denom);
            cell.count += 1;
        }
        for (auto it = raw[li].begin(); it != raw[li].end();) {
            if (it->second.w < kMinTagWeight) {
                it = raw[li].erase(it);
            } else {
                vocab_weight[it->first] += it->second.w;
                ++it;
            }
        }
    }

    AssociationMatrix m;
    m.loc_ids.reserve(locs.size());
    for (const auto& l : locs.locations) m.loc_ids.push_back(l.loc_id);

    std::vector<std::string> vocab;
    vocab.reserve(vocab_weight.size());
    for (const auto& [tag, _] : vocab_weight) vocab.push_back(tag);
    if (max_vocab > 0 && vocab.size() > max_vocab) {
        std::sort(vocab.begin(), vocab.end(), [&](const std::string& a, const std::string& b) {
            double wa = vocab_weight[a], wb = vocab_weight[b];
            if (wa != wb) return wa > wb;
            return a < b;
        });
        vocab.resize(max_vocab);
        std::sort(vocab.begin(), vocab.end());
    }
    m.tags = std::move(vocab);
    for (std::uint32_t t = 0; t < m.tags.size(); ++t) m.tag_index[m.tags[t]] = t;

    m.rows.assign(locs.size(), {});
    m.tag_weight_sum.assign(m.tags.size(), 0.0);
    m.loc_weight_sum.assign(locs.size(), 0.0);
    for (std::size_t li = 0; li < locs.size(); ++li) {
        for (const auto& [tag, cell] : raw[li]) {
            auto it = m.tag_index.find(tag);
            if (it == m.tag_index.end()) continue;  // truncated out of vocabulary
            m.rows[li].push_back({it->second, cell.w, 0.0, cell.count});
            m.tag_weight_sum[it->second] += cell.w;
            m.loc_weight_sum[li] += cell.w;
            m.total_weight += cell.w;
        }
        std::sort(m.rows[li].begin(), m.rows[li].end(),
                  [](const AssociationMatrix::Entry& a, const AssociationMatrix::Entry& b) {
                      return a.tag < b.tag;
                  });
    }

    // PPMI(t,l) = max(0, log(p_tl / (p_t p_l))) with p_tl = w/N,
    // p_t = tag_sum/N, p_l = loc_sum/N; log never evaluated on zero mass
    const double n = m.total_weight;
    if (n > 0.0) {
        for (std::size_t li = 0; li < locs.size(); ++li) {
            for (auto& e : m.rows[li]) {
                const double ratio =
                    (e.w * n) / (m.tag_weight_sum[e.tag] * m.loc_weight_sum[li]);
                e.ppmi = std::max(0.0, std::log(ratio));
            }
        }
    }
    return m;
}

}  // namespace geoembed
