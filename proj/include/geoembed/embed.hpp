#ifndef GEOEMBED_EMBED_HPP
#define GEOEMBED_EMBED_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoembed/corpus.hpp"
#include "geoembed/weighting.hpp"

namespace geoembed {

struct EmbedConfig {
    std::size_t dim = 10;          // grid {10, 50, 300}
    double alpha = 1.0;            // weight of the tag component, in [0,1]
    double beta = 0.0;             // weight of the category component, >= 0
    double lr = 0.05;
    std::size_t iterations = 30;
    std::uint64_t seed = 42;
    bool with_negatives = true;
    std::size_t negative_ratio = 10;  // negatives per positive, per location
    std::size_t negative_cap = 1000;
    bool glove_mode = false;       // plain GloVe objective on co-occurrence counts
    double glove_xmax = 100.0;
    double glove_exponent = 0.75;
};

// Flattened term streams the trainer iterates over. Built once per run;
// negatives are sampled here, not resampled per epoch.
struct TrainingPlan {
    struct TagPair {
        std::uint32_t loc, tag;
        double target;  // PPMI for positives, 0 for negatives
    };
    struct GlovePair {
        std::uint32_t loc, tag;
        double fx;      // weighting f(x)
        double log_x;
    };
    struct NfTerm {
        std::uint32_t loc, feature;
        double score;  // z-scored target
    };
    struct CatTerm {
        std::uint32_t loc, cat;
    };

    std::vector<std::string> loc_ids;
    std::vector<std::string> tags;      // plan vocabulary (possibly KL-restricted)
    std::vector<std::string> nf_names;
    std::vector<std::string> cat_ids;

    std::vector<TagPair> pairs_positive;
    std::vector<TagPair> pairs_negative;
    std::vector<GlovePair> glove_pairs;
    std::vector<NfTerm> nf_terms;
    std::vector<CatTerm> cat_terms;
    bool glove_mode = false;

    std::size_t n_terms() const {
        return glove_mode ? glove_pairs.size()
                          : pairs_positive.size() + pairs_negative.size() + nf_terms.size() +
                                cat_terms.size();
    }
};

// All trainable parameters as flat arrays; vectors are row-major [i*dim+d].
struct ParamSet {
    std::vector<double> v;      // location vectors
    std::vector<double> w_tag;  // tag context vectors
    std::vector<double> b_tag;
    std::vector<double> b_loc;  // location biases, glove mode only
    std::vector<double> w_nf;   // numerical feature vectors
    std::vector<double> b_nf;
    std::vector<double> w_cat;  // category vectors
};

struct ObjectiveValue {
    double j = 0.0;
    double j_tags = 0.0;
    double j_nf = 0.0;
    double j_cat = 0.0;
};

struct EmbeddingModel {
    std::size_t dim = 0;
    double alpha = 1.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    bool glove_mode = false;
    double glove_xmax = 100.0;
    double glove_exponent = 0.75;

    std::vector<std::string> loc_ids;
    std::vector<std::string> tags;
    std::vector<std::string> nf_names;
    std::vector<std::string> cat_ids;

    ParamSet params;
    ParamSet accum;  // adagrad G, per parameter

    std::vector<ObjectiveValue> objective_history;  // one entry per iteration

    const double* loc_vector(std::size_t li) const { return params.v.data() + li * dim; }
};

// nf_table must be normalized; categories contribute J_cat terms. Pass
// nullptr to leave a component out. selected, when present, restricts the
// tag vocabulary.
TrainingPlan build_training_plan(const AssociationMatrix& assoc,
                                 const std::vector<std::string>* selected,
                                 const NumericalFeatureTable* nf_table,
                                 const std::vector<CategoryAssignment>* categories,
                                 const EmbedConfig& cfg);

ObjectiveValue objective(const EmbeddingModel& model, const TrainingPlan& plan);

// Full-batch analytic gradients of the objective, same shapes as params.
ParamSet gradients(const EmbeddingModel& model, const TrainingPlan& plan);

EmbeddingModel init_model(const TrainingPlan& plan, const EmbedConfig& cfg);

EmbeddingModel train(const TrainingPlan& plan, const EmbedConfig& cfg);

enum class VectorFormat { text, binary };

void export_vectors(const EmbeddingModel& model, const std::string& path, VectorFormat fmt,
                    const std::string& header = "");

struct LoadedVectors {
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> vectors;
};

LoadedVectors load_vectors(const std::string& path, VectorFormat fmt);

void write_objective_csv(const EmbeddingModel& model, const std::string& path,
                         const std::string& header = "");

}  // namespace geoembed

#endif
