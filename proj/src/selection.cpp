#include "geoembed/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "geoembed/util.hpp"

namespace geoembed {

ClassWeights class_priors(const AssociationMatrix& assoc, const CategoryAssignment& classes) {
    ClassWeights cw;
    for (const auto& [cat, locs] : classes.members) {
        cw.class_ids.push_back(cat);
        cw.class_locs.emplace_back(locs.begin(), locs.end());
    }
    std::vector<double> mass(cw.class_ids.size(), 0.0);
    for (std::size_t i = 0; i < cw.class_ids.size(); ++i)
        for (std::size_t li : cw.class_locs[i]) mass[i] += assoc.loc_weight_sum[li];
    cw.total_mass = 0.0;
    for (double m : mass) cw.total_mass += m;
    cw.q.assign(mass.size(), 0.0);
    if (cw.total_mass > 0.0)
        for (std::size_t i = 0; i < mass.size(); ++i) cw.q[i] = mass[i] / cw.total_mass;
    for (std::size_t i = 0; i < mass.size(); ++i)
        if (mass[i] == 0.0)
            std::cerr << "warning: class " << cw.class_ids[i]
                      << " has zero total weight, Q = 0\n";
    return cw;
}

namespace {

// per-class, per-tag weight sums over classed locations
std::vector<std::vector<double>> class_tag_weights(const AssociationMatrix& assoc,
                                                   const ClassWeights& cw) {
    std::vector<std::vector<double>> out(cw.class_ids.size(),
                                         std::vector<double>(assoc.n_tags(), 0.0));
    for (std::size_t i = 0; i < cw.class_ids.size(); ++i)
        for (std::size_t li : cw.class_locs[i])
            for (const auto& e : assoc.rows[li]) out[i][e.tag] += e.w;
    return out;
}

std::vector<double> posterior_from_sums(const std::vector<double>& w_sums,
                                        const ClassWeights& cw, double gamma,
                                        bool renormalize) {
    std::vector<double> p(w_sums.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = (w_sums[i] + gamma * cw.q[i]) / (cw.total_mass + gamma);
    if (renormalize) {
        double s = 0.0;
        for (double v : p) s += v;
        if (s > 0.0)
            for (double& v : p) v /= s;
    }
    return p;
}

double kl_score(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;  // 0 log 0 = 0
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

}  // namespace

std::vector<double> smoothed_posterior(const AssociationMatrix& assoc, std::uint32_t tag,
                                       const ClassWeights& cw, double gamma, bool renormalize) {
    std::vector<double> w_sums(cw.class_ids.size(), 0.0);
    for (std::size_t i = 0; i < cw.class_ids.size(); ++i) {
        for (std::size_t li : cw.class_locs[i]) {
            const auto& row = assoc.rows[li];
            auto it = std::lower_bound(row.begin(), row.end(), tag,
                                       [](const AssociationMatrix::Entry& e, std::uint32_t t) {
                                           return e.tag < t;
                                       });
            if (it != row.end() && it->tag == tag) w_sums[i] += it->w;
        }
    }
    return posterior_from_sums(w_sums, cw, gamma, renormalize);
}

SelectionResult kl_select(const AssociationMatrix& assoc, const CategoryAssignment& classes,
                          const SelectionConfig& cfg) {
    if (cfg.top_k == 0) throw ValidationError("kl_select: K must be positive");
    ClassWeights cw = class_priors(assoc, classes);
    std::size_t positive_classes = 0;
    for (double q : cw.q)
        if (q > 0.0) ++positive_classes;
    if (positive_classes < 2)
        throw ValidationError("kl_select: need at least two classes with positive prior");

    const auto ctw = class_tag_weights(assoc, cw);
    SelectionResult res;
    res.gamma = cfg.gamma;
    res.class_ids = cw.class_ids;
    res.scored.reserve(assoc.n_tags());
    std::vector<double> w_sums(cw.class_ids.size());
    for (std::uint32_t t = 0; t < assoc.n_tags(); ++t) {
        for (std::size_t i = 0; i < w_sums.size(); ++i) w_sums[i] = ctw[i][t];
        auto p = posterior_from_sums(w_sums, cw, cfg.gamma, !cfg.raw_posterior);
        res.scored.emplace_back(assoc.tags[t], kl_score(p, cw.q));
    }
    std::sort(res.scored.begin(), res.scored.end(),
              [&](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  const double wa = assoc.tag_weight_sum[assoc.tag_index.at(a.first)];
                  const double wb = assoc.tag_weight_sum[assoc.tag_index.at(b.first)];
                  if (wa != wb) return wa > wb;
                  return a.first < b.first;
              });
    const std::size_t k = std::min(cfg.top_k, res.scored.size());
    res.selected.reserve(k);
    for (std::size_t i = 0; i < k; ++i) res.selected.push_back(res.scored[i].first);
    return res;
}

CategoryAssignment discretize_targets(const std::vector<double>& values,
                                      const std::vector<double>& cutoffs,
                                      const std::string& taxonomy_id) {
    CategoryAssignment out;
    out.taxonomy_id = taxonomy_id;
    std::vector<double> cuts = cutoffs;
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t li = 0; li < values.size(); ++li) {
        std::size_t bin = 0;
        while (bin < cuts.size() && values[li] >= cuts[bin]) ++bin;
        out.members["bin" + std::to_string(bin)].insert(li);
    }
    return out;
}

void write_selection_tsv(const SelectionResult& sel, const std::string& path,
                         const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    if (!header.empty()) out << header << "\n";
    // scored is sorted, so the first |selected| entries are the selection
    for (std::size_t i = 0; i < sel.selected.size(); ++i)
        out << sel.scored[i].first << '\t' << fmt_double(sel.scored[i].second) << '\n';
}

std::vector<std::string> read_selection_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open selection artifact: " + path);
    std::vector<std::string> tags;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        tags.push_back(split(line, '\t')[0]);
    }
    return tags;
}

}  // namespace geoembed
