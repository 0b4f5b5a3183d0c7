#ifndef GEOEMBED_SELECTION_HPP
#define GEOEMBED_SELECTION_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "geoembed/corpus.hpp"
#include "geoembed/weighting.hpp"

namespace geoembed {

struct SelectionConfig {
    double gamma = 10.0;      // Bayesian smoothing strength
    std::size_t top_k = 100000;
    // The smoothed posterior as written does not sum to 1 over classes; by
    // default it is renormalized before the divergence so scores are >= 0.
    // raw_posterior preserves the unnormalized form for fidelity runs.
    bool raw_posterior = false;
};

struct SelectionResult {
    std::vector<std::pair<std::string, double>> scored;  // (tag, KL), descending
    std::vector<std::string> selected;                   // top-K tags
    double gamma = 0.0;
    std::vector<std::string> class_ids;
};

// Classes are the categories of one taxonomy, identified with their member
// location sets. Only locations belonging to some class contribute mass.
struct ClassWeights {
    std::vector<std::string> class_ids;
    std::vector<std::vector<std::size_t>> class_locs;  // location indices per class
    std::vector<double> q;                             // class priors, sum to 1
    double total_mass = 0.0;                           // weight over classed locations
};

ClassWeights class_priors(const AssociationMatrix& assoc, const CategoryAssignment& classes);

// Smoothed P(C_i|t): (sum_{l in C_i} w(t,l) + gamma q_i) / (mass + gamma),
// optionally renormalized over classes.
std::vector<double> smoothed_posterior(const AssociationMatrix& assoc, std::uint32_t tag,
                                       const ClassWeights& cw, double gamma,
                                       bool renormalize = true);

SelectionResult kl_select(const AssociationMatrix& assoc, const CategoryAssignment& classes,
                          const SelectionConfig& cfg);

// Classes for regression-style targets: locations bucketed by cut-off points
// applied to a numeric value per location.
CategoryAssignment discretize_targets(const std::vector<double>& values,
                                      const std::vector<double>& cutoffs,
                                      const std::string& taxonomy_id = "discretized");

void write_selection_tsv(const SelectionResult& sel, const std::string& path,
                         const std::string& header = "");
std::vector<std::string> read_selection_tsv(const std::string& path);

}  // namespace geoembed

#endif
