#ifndef GEOEMBED_PIPELINE_HPP
#define GEOEMBED_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoembed/corpus.hpp"
#include "geoembed/embed.hpp"
#include "geoembed/evalkit.hpp"
#include "geoembed/selection.hpp"
#include "geoembed/synthgen.hpp"
#include "geoembed/weighting.hpp"

namespace geoembed {

enum class Variant {
    glove,
    egel_tags,
    egel_tags_ns,
    egel_kl_tags_ns,
    egel_all,
    bow_tags,
    bow_kl_tags,
    bow_all,
};

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// key=value configuration; '#' lines are comments. Unknown keys are kept so
// the hash covers them.
struct PipelineConfig {
    std::map<std::string, std::string> kv;

    std::string records_path, locations_path, features_path, categories_path;
    double radius_km = 1.0;     // D
    double sigma_km = 1.0 / 3;  // D/3 unless set
    std::size_t max_vocab = 0;
    Variant variant = Variant::egel_tags_ns;

    EmbedConfig embed;
    SelectionConfig selection;
    std::string select_taxonomy;                 // classes from this taxonomy, or
    std::string select_feature;                  // discretize this numeric target
    std::vector<double> select_cutoffs{3.0, 7.0};

    std::vector<std::string> exclude_sources;    // held out of training inputs
    std::vector<std::string> eval_tasks;         // "category:<tax>" or "feature:<name>"

    std::vector<std::size_t> sweep_dims{10, 50, 300};
    std::vector<double> sweep_alphas{0.1, 0.01, 0.001, 0.0001};
    std::vector<double> sweep_betas{1, 10, 100, 1000, 10000, 100000};

    SynthConfig synth;

    static PipelineConfig load(const std::string& path);
    // stable hash over every key=value pair plus the effective seed
    std::uint64_t config_hash() const;
    std::string artifact_header() const;
};

// Inputs reloaded from the corpus files named by the config.
struct CorpusBundle {
    std::vector<TagRecord> records;
    LocationSet locs;
    std::optional<NumericalFeatureTable> nf;
    std::vector<CategoryAssignment> categories;
};

CorpusBundle load_corpus(const PipelineConfig& cfg, bool need_records = true);

void cmd_synth(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_build(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_select(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_train(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_eval(const PipelineConfig& cfg, const std::string& out_dir);
void cmd_sweep(const PipelineConfig& cfg, const std::string& out_dir);

// Reconstructs the association matrix from assoc.tsv + counts.tsv, with row
// order fixed by the locations file and PPMI recomputed from the stored w.
AssociationMatrix load_assoc_artifact(const std::string& out_dir, const PipelineConfig& cfg,
                                      const LocationSet& locs);

// header check: artifacts produced under a different config hash are refused
void verify_artifact_header(const std::string& path, const PipelineConfig& cfg);

}  // namespace geoembed

#endif
