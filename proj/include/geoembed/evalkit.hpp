#ifndef GEOEMBED_EVALKIT_HPP
#define GEOEMBED_EVALKIT_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "geoembed/corpus.hpp"
#include "geoembed/weighting.hpp"

namespace geoembed {

// 2/3 train, 1/6 test, 1/6 tune; disjoint, covering, sizes within one of
// the exact proportions.
struct SplitSpec {
    std::vector<std::size_t> train, test, tune;
};

SplitSpec make_split(std::size_t n_locations, std::uint64_t seed);

enum class TaskKind { classification, regression };

struct EvalReport {
    std::string task_id;
    std::string variant;
    TaskKind kind = TaskKind::classification;
    double precision = 0.0, recall = 0.0, macro_f1 = 0.0;  // classification
    double mae = 0.0, spearman = 0.0;                      // regression
    double chosen_lambda = 0.0;

    std::string csv_line() const;
    static std::string csv_header();
    static EvalReport from_csv_line(const std::string& line);
};

// Per-location feature rows plus provenance tags naming the information
// sources baked into them. run_task refuses a task whose target provenance
// appears here, so leakage is a structural error, not a convention.
struct FeatureSet {
    std::vector<std::vector<double>> rows;
    std::set<std::string> provenance;
};

struct TaskSpec {
    std::string task_id;
    TaskKind kind = TaskKind::classification;
    std::vector<double> targets;  // 0/1 for classification, real for regression
    std::string target_provenance;
};

// L2-regularized linear probe: logistic loss for classification, squared
// loss for regression. Weights only are regularized, the intercept is free.
struct LinearProbe {
    TaskKind kind = TaskKind::classification;
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.0;

    double raw(const std::vector<double>& x) const;
    double predict(const std::vector<double>& x) const;  // 0/1 class or real value
};

LinearProbe fit_probe(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                      TaskKind kind, double lambda);

// Fits on the train rows for each lambda in the grid, keeps the one with
// the best tune-split F1 (classification) or Spearman rho (regression).
LinearProbe train_probe(const FeatureSet& features, const std::vector<double>& targets,
                        TaskKind kind, const std::vector<double>& reg_grid,
                        const SplitSpec& split);

double spearman_rho(const std::vector<double>& pred, const std::vector<double>& actual);
double mae(const std::vector<double>& pred, const std::vector<double>& actual);

struct F1Result {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};
// Macro average over the positive and negative class of a binary task.
F1Result macro_f1(const std::vector<double>& pred, const std::vector<double>& actual);

EvalReport run_task(const FeatureSet& features, const TaskSpec& task, const SplitSpec& split,
                    const std::vector<double>& reg_grid = {0.0, 0.01, 0.1, 1.0});

// PPMI-weighted bag-of-words rows, optionally restricted to a selection and
// optionally concatenated with z-scored features and one-hot categories.
FeatureSet bow_features(const AssociationMatrix& assoc,
                        const std::vector<std::string>* selected,
                        const NumericalFeatureTable* nf_table,
                        const std::vector<CategoryAssignment>* categories);

// leave-one-out 1-nearest-neighbour label agreement
double knn_purity(const std::vector<std::vector<double>>& vectors,
                  const std::vector<int>& labels);

// mean intra-cluster pairwise distance over mean inter-cluster pairwise distance
double intra_inter_ratio(const std::vector<std::vector<double>>& vectors,
                         const std::vector<int>& labels);

}  // namespace geoembed

#endif
