#include "geoembed/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "geoembed/util.hpp"

namespace geoembed {

namespace fs = std::filesystem;

Variant parse_variant(const std::string& name) {
    if (name == "glove") return Variant::glove;
    if (name == "egel-tags") return Variant::egel_tags;
    if (name == "egel-tags-ns") return Variant::egel_tags_ns;
    if (name == "egel-kl-tags-ns") return Variant::egel_kl_tags_ns;
    if (name == "egel-all") return Variant::egel_all;
    if (name == "bow-tags") return Variant::bow_tags;
    if (name == "bow-kl-tags") return Variant::bow_kl_tags;
    if (name == "bow-all") return Variant::bow_all;
    throw ValidationError("unknown variant: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::glove: return "glove";
        case Variant::egel_tags: return "egel-tags";
        case Variant::egel_tags_ns: return "egel-tags-ns";
        case Variant::egel_kl_tags_ns: return "egel-kl-tags-ns";
        case Variant::egel_all: return "egel-all";
        case Variant::bow_tags: return "bow-tags";
        case Variant::bow_kl_tags: return "bow-kl-tags";
        case Variant::bow_all: return "bow-all";
    }
    return "?";
}

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) {
        double v;
        if (!parse_double(part, v)) throw ValidationError("bad number in list: " + part);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& part : split(s, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

bool variant_uses_selection(Variant v) {
    return v == Variant::egel_kl_tags_ns || v == Variant::egel_all ||
           v == Variant::bow_kl_tags;
}

bool variant_is_bow(Variant v) {
    return v == Variant::bow_tags || v == Variant::bow_kl_tags || v == Variant::bow_all;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    PipelineConfig cfg;
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open config: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("bad config line: " + line);
        cfg.kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    auto gets = [&](const char* key, std::string& dst) {
        auto it = cfg.kv.find(key);
        if (it != cfg.kv.end()) dst = it->second;
    };
    auto getd = [&](const char* key, double& dst) {
        auto it = cfg.kv.find(key);
        if (it != cfg.kv.end() && !parse_double(it->second, dst))
            throw ValidationError(std::string("bad number for ") + key);
    };
    auto getn = [&](const char* key, std::size_t& dst) {
        auto it = cfg.kv.find(key);
        if (it == cfg.kv.end()) return;
        long v;
        if (!parse_long(it->second, v) || v < 0)
            throw ValidationError(std::string("bad count for ") + key);
        dst = static_cast<std::size_t>(v);
    };

    gets("records", cfg.records_path);
    gets("locations", cfg.locations_path);
    gets("features", cfg.features_path);
    gets("categories", cfg.categories_path);
    getd("D", cfg.radius_km);
    cfg.sigma_km = cfg.radius_km / 3.0;
    getd("sigma", cfg.sigma_km);
    getn("max_vocab", cfg.max_vocab);
    if (auto it = cfg.kv.find("variant"); it != cfg.kv.end())
        cfg.variant = parse_variant(it->second);

    getn("dim", cfg.embed.dim);
    getd("alpha", cfg.embed.alpha);
    getd("beta", cfg.embed.beta);
    getd("lr", cfg.embed.lr);
    getn("iterations", cfg.embed.iterations);
    if (auto it = cfg.kv.find("seed"); it != cfg.kv.end()) {
        long v;
        if (!parse_long(it->second, v)) throw ValidationError("bad seed");
        cfg.embed.seed = static_cast<std::uint64_t>(v);
    }
    getn("negative_ratio", cfg.embed.negative_ratio);
    getn("negative_cap", cfg.embed.negative_cap);

    getd("gamma", cfg.selection.gamma);
    getn("K", cfg.selection.top_k);
    if (auto it = cfg.kv.find("raw_posterior"); it != cfg.kv.end())
        cfg.selection.raw_posterior = it->second == "1" || it->second == "true";
    gets("select_taxonomy", cfg.select_taxonomy);
    gets("select_feature", cfg.select_feature);
    if (auto it = cfg.kv.find("cutoffs"); it != cfg.kv.end())
        cfg.select_cutoffs = parse_double_list(it->second);

    if (auto it = cfg.kv.find("exclude_sources"); it != cfg.kv.end())
        cfg.exclude_sources = parse_string_list(it->second);
    if (auto it = cfg.kv.find("eval_tasks"); it != cfg.kv.end())
        cfg.eval_tasks = parse_string_list(it->second);

    if (auto it = cfg.kv.find("sweep_dims"); it != cfg.kv.end()) {
        cfg.sweep_dims.clear();
        for (double v : parse_double_list(it->second))
            cfg.sweep_dims.push_back(static_cast<std::size_t>(v));
    }
    if (auto it = cfg.kv.find("sweep_alphas"); it != cfg.kv.end())
        cfg.sweep_alphas = parse_double_list(it->second);
    if (auto it = cfg.kv.find("sweep_betas"); it != cfg.kv.end())
        cfg.sweep_betas = parse_double_list(it->second);

    getn("synth_locations", cfg.synth.n_locations);
    getn("synth_clusters", cfg.synth.n_clusters);
    getn("synth_tags_per_cluster", cfg.synth.tags_per_cluster);
    getn("synth_noise_tags", cfg.synth.noise_tags);
    getn("synth_records_per_location", cfg.synth.records_per_location);
    getn("synth_users", cfg.synth.n_users);
    getd("synth_center_lat", cfg.synth.center_lat);
    getd("synth_center_lon", cfg.synth.center_lon);
    getd("synth_extent_deg", cfg.synth.extent_deg);
    getd("synth_jitter_km", cfg.synth.jitter_km);
    getd("synth_signal_fraction", cfg.synth.signal_fraction);
    if (auto it = cfg.kv.find("synth_seed"); it != cfg.kv.end()) {
        long v;
        if (!parse_long(it->second, v)) throw ValidationError("bad synth_seed");
        cfg.synth.seed = static_cast<std::uint64_t>(v);
    }
    return cfg;
}

std::uint64_t PipelineConfig::config_hash() const {
    std::string canon;
    for (const auto& [k, v] : kv) canon += k + "=" + v + "\n";
    canon += "seed=" + std::to_string(embed.seed) + "\n";
    return fnv1a(canon);
}

std::string PipelineConfig::artifact_header() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash()));
    return std::string("# geoembed hash=") + buf + " seed=" + std::to_string(embed.seed);
}

void verify_artifact_header(const std::string& path, const PipelineConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("missing artifact: " + path);
    std::string line;
    std::getline(in, line);
    const std::string expect = cfg.artifact_header();
    // sources= suffixes are allowed after the fixed prefix
    if (line.compare(0, expect.size(), expect) != 0)
        throw ValidationError("artifact " + path +
                              " was produced under a different config (header mismatch)");
}

CorpusBundle load_corpus(const PipelineConfig& cfg, bool need_records) {
    CorpusBundle b;
    if (cfg.locations_path.empty()) throw ValidationError("config: locations path not set");
    b.locs = load_locations(cfg.locations_path);
    if (need_records) {
        if (cfg.records_path.empty()) throw ValidationError("config: records path not set");
        b.records = load_tag_records(cfg.records_path);
    }
    if (!cfg.features_path.empty())
        b.nf = load_numerical_features(cfg.features_path, b.locs);
    if (!cfg.categories_path.empty())
        b.categories = load_categories(cfg.categories_path, b.locs);
    return b;
}

void cmd_synth(const PipelineConfig& cfg, const std::string& out_dir) {
    generate_synthetic(cfg.synth, out_dir);
}

void cmd_build(const PipelineConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    CorpusBundle b = load_corpus(cfg);
    AssociationMatrix m = build_association_matrix(b.records, b.locs, cfg.radius_km,
                                                   cfg.sigma_km, cfg.max_vocab);
    const auto empty = m.empty_rows();
    if (!empty.empty())
        std::cerr << "coverage: " << empty.size() << " location(s) have no tags within D\n";
    m.dump_tsv(out_dir + "/assoc.tsv", cfg.artifact_header());

    // counts go in a sibling artifact; the glove variant trains on them
    std::ofstream out(out_dir + "/counts.tsv", std::ios::binary);
    out << cfg.artifact_header() << "\n";
    std::vector<std::size_t> order(m.loc_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b2) { return m.loc_ids[a] < m.loc_ids[b2]; });
    for (std::size_t li : order)
        for (const auto& e : m.rows[li])
            out << m.loc_ids[li] << '\t' << m.tags[e.tag] << '\t' << e.count << '\n';
}

AssociationMatrix load_assoc_artifact(const std::string& out_dir, const PipelineConfig& cfg,
                                      const LocationSet& locs) {
    const std::string assoc_path = out_dir + "/assoc.tsv";
    const std::string counts_path = out_dir + "/counts.tsv";
    if (!fs::exists(assoc_path))
        throw MissingArtifactError("missing " + assoc_path + "; run the build command first");
    verify_artifact_header(assoc_path, cfg);
    verify_artifact_header(counts_path, cfg);

    struct RawEntry {
        std::size_t loc;
        std::string tag;
        double w, ppmi;
        std::uint32_t count = 0;
    };
    std::vector<RawEntry> entries;
    {
        std::ifstream in(assoc_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto f = split(line, '\t');
            if (f.size() != 4) throw ValidationError(assoc_path + ": bad line");
            auto it = locs.index_of.find(f[0]);
            if (it == locs.index_of.end())
                throw ValidationError(assoc_path + ": unknown loc_id " + f[0]);
            RawEntry e;
            e.loc = it->second;
            e.tag = f[1];
            if (!parse_double(f[2], e.w) || !parse_double(f[3], e.ppmi))
                throw ValidationError(assoc_path + ": bad numbers");
            entries.push_back(std::move(e));
        }
    }
    std::map<std::pair<std::string, std::string>, std::uint32_t> counts;
    {
        std::ifstream in(counts_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto f = split(line, '\t');
            long c;
            if (f.size() != 3 || !parse_long(f[2], c))
                throw ValidationError(counts_path + ": bad line");
            counts[{f[0], f[1]}] = static_cast<std::uint32_t>(c);
        }
    }

    AssociationMatrix m;
    m.loc_ids.reserve(locs.size());
    for (const auto& l : locs.locations) m.loc_ids.push_back(l.loc_id);
    std::set<std::string> vocab;
    for (const auto& e : entries) vocab.insert(e.tag);
    m.tags.assign(vocab.begin(), vocab.end());
    for (std::uint32_t t = 0; t < m.tags.size(); ++t) m.tag_index[m.tags[t]] = t;
    m.rows.assign(locs.size(), {});
    m.tag_weight_sum.assign(m.tags.size(), 0.0);
    m.loc_weight_sum.assign(locs.size(), 0.0);
    for (const auto& e : entries) {
        const std::uint32_t t = m.tag_index.at(e.tag);
        std::uint32_t cnt = 0;
        if (auto it = counts.find({m.loc_ids[e.loc], e.tag}); it != counts.end())
            cnt = it->second;
        m.rows[e.loc].push_back({t, e.w, e.ppmi, cnt});
        m.tag_weight_sum[t] += e.w;
        m.loc_weight_sum[e.loc] += e.w;
        m.total_weight += e.w;
    }
    for (auto& row : m.rows)
        std::sort(row.begin(), row.end(),
                  [](const AssociationMatrix::Entry& a, const AssociationMatrix::Entry& b) {
                      return a.tag < b.tag;
                  });
    return m;
}

namespace {

// classes for KL selection, from a taxonomy or a discretized numeric target
CategoryAssignment selection_classes(const PipelineConfig& cfg, const CorpusBundle& b) {
    if (!cfg.select_taxonomy.empty()) {
        for (const auto& tax : b.categories)
            if (tax.taxonomy_id == cfg.select_taxonomy) return tax;
        throw ValidationError("select_taxonomy '" + cfg.select_taxonomy +
                              "' not found in categories file");
    }
    if (!cfg.select_feature.empty()) {
        if (!b.nf) throw ValidationError("select_feature set but no features file");
        auto it = std::find(b.nf->feature_names.begin(), b.nf->feature_names.end(),
                            cfg.select_feature);
        if (it == b.nf->feature_names.end())
            throw ValidationError("select_feature '" + cfg.select_feature + "' not found");
        const auto k = static_cast<std::size_t>(it - b.nf->feature_names.begin());
        std::vector<double> vals;
        vals.reserve(b.nf->values.size());
        for (const auto& row : b.nf->values) vals.push_back(row[k]);
        return discretize_targets(vals, cfg.select_cutoffs, cfg.select_feature);
    }
    throw ValidationError("selection needs select_taxonomy or select_feature");
}

bool is_excluded(const PipelineConfig& cfg, const std::string& source) {
    return std::find(cfg.exclude_sources.begin(), cfg.exclude_sources.end(), source) !=
           cfg.exclude_sources.end();
}

// nf table restricted to non-excluded columns, then z-scored on the train split
std::optional<NumericalFeatureTable> training_nf(const PipelineConfig& cfg,
                                                 const CorpusBundle& b,
                                                 const SplitSpec& split) {
    if (!b.nf) return std::nullopt;
    NumericalFeatureTable t;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < b.nf->n_features(); ++k) {
        if (is_excluded(cfg, b.nf->feature_names[k])) continue;
        keep.push_back(k);
        t.feature_names.push_back(b.nf->feature_names[k]);
    }
    if (keep.empty()) return std::nullopt;
    t.values.reserve(b.nf->values.size());
    for (const auto& row : b.nf->values) {
        std::vector<double> r;
        r.reserve(keep.size());
        for (std::size_t k : keep) r.push_back(row[k]);
        t.values.push_back(std::move(r));
    }
    t.normalize(split.train);
    return t;
}

std::vector<CategoryAssignment> training_categories(const PipelineConfig& cfg,
                                                    const CorpusBundle& b) {
    std::vector<CategoryAssignment> out;
    for (const auto& tax : b.categories)
        if (!is_excluded(cfg, tax.taxonomy_id)) out.push_back(tax);
    return out;
}

std::vector<std::string> model_sources(const PipelineConfig& cfg,
                                       const std::optional<NumericalFeatureTable>& nf,
                                       const std::vector<CategoryAssignment>& cats) {
    std::vector<std::string> src{"tags"};
    if (nf)
        for (const auto& name : nf->feature_names) src.push_back(name);
    for (const auto& tax : cats) src.push_back(tax.taxonomy_id);
    return src;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += v[i];
    }
    return s;
}

EmbedConfig variant_embed_config(const PipelineConfig& cfg) {
    EmbedConfig ec = cfg.embed;
    switch (cfg.variant) {
        case Variant::glove:
            ec.glove_mode = true;
            ec.with_negatives = false;
            break;
        case Variant::egel_tags:
            ec.with_negatives = false;
            [[fallthrough]];
        case Variant::egel_tags_ns:
        case Variant::egel_kl_tags_ns:
            if (ec.beta != 0.0)
                std::cerr << "warning: beta ignored for variant "
                          << variant_name(cfg.variant) << "\n";
            if (ec.alpha != 1.0 && cfg.kv.count("alpha"))
                std::cerr << "warning: alpha ignored for variant "
                          << variant_name(cfg.variant) << "\n";
            ec.alpha = 1.0;
            ec.beta = 0.0;
            break;
        case Variant::egel_all:
            break;
        default:
            throw ValidationError("variant " + variant_name(cfg.variant) +
                                  " has no training step");
    }
    return ec;
}

}  // namespace

void cmd_select(const PipelineConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    CorpusBundle b = load_corpus(cfg, /*need_records=*/false);
    AssociationMatrix m = load_assoc_artifact(out_dir, cfg, b.locs);
    const CategoryAssignment classes = selection_classes(cfg, b);
    SelectionResult sel = kl_select(m, classes, cfg.selection);
    write_selection_tsv(sel, out_dir + "/selection.tsv", cfg.artifact_header());
}

void cmd_train(const PipelineConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    CorpusBundle b = load_corpus(cfg, /*need_records=*/false);
    AssociationMatrix m = load_assoc_artifact(out_dir, cfg, b.locs);

    std::optional<std::vector<std::string>> selected;
    if (variant_uses_selection(cfg.variant) && cfg.variant != Variant::bow_kl_tags) {
        const std::string path = out_dir + "/selection.tsv";
        if (!fs::exists(path))
            throw MissingArtifactError("missing " + path + "; run the select command first");
        verify_artifact_header(path, cfg);
        selected = read_selection_tsv(path);
    }

    EmbedConfig ec = variant_embed_config(cfg);
    const SplitSpec split = make_split(b.locs.size(), ec.seed);

    std::optional<NumericalFeatureTable> nf;
    std::vector<CategoryAssignment> cats;
    if (cfg.variant == Variant::egel_all) {
        nf = training_nf(cfg, b, split);
        cats = training_categories(cfg, b);
    }

    TrainingPlan plan = build_training_plan(m, selected ? &*selected : nullptr,
                                            nf ? &*nf : nullptr,
                                            cats.empty() ? nullptr : &cats, ec);
    EmbeddingModel model = train(plan, ec);

    const std::string sources = join(model_sources(cfg, nf, cats), ',');
    const std::string header = cfg.artifact_header() + " sources=" + sources;
    export_vectors(model, out_dir + "/vectors.txt", VectorFormat::text, header);
    export_vectors(model, out_dir + "/vectors.bin", VectorFormat::binary, header);
    write_objective_csv(model, out_dir + "/objective.csv", cfg.artifact_header());
}

namespace {

// expands "category:<tax>" into one binary task per category and
// "feature:<name>" into one regression task
std::vector<TaskSpec> expand_tasks(const PipelineConfig& cfg, const CorpusBundle& b) {
    std::vector<TaskSpec> out;
    if (cfg.eval_tasks.empty()) throw ValidationError("config: eval_tasks not set");
    for (const auto& task : cfg.eval_tasks) {
        const auto colon = task.find(':');
        if (colon == std::string::npos)
            throw ValidationError("bad eval task (want kind:name): " + task);
        const std::string kind = task.substr(0, colon);
        const std::string name = task.substr(colon + 1);
        if (kind == "category") {
            const CategoryAssignment* tax = nullptr;
            for (const auto& t : b.categories)
                if (t.taxonomy_id == name) tax = &t;
            if (!tax) throw ValidationError("eval task taxonomy not found: " + name);
            for (const auto& [cat, locs] : tax->members) {
                TaskSpec ts;
                ts.task_id = "category:" + name + "/" + cat;
                ts.kind = TaskKind::classification;
                ts.target_provenance = name;
                ts.targets.assign(b.locs.size(), 0.0);
                for (std::size_t li : locs) ts.targets[li] = 1.0;
                out.push_back(std::move(ts));
            }
        } else if (kind == "feature") {
            if (!b.nf) throw ValidationError("feature eval task but no features file");
            auto it = std::find(b.nf->feature_names.begin(), b.nf->feature_names.end(), name);
            if (it == b.nf->feature_names.end())
                throw ValidationError("eval task feature not found: " + name);
            const auto k = static_cast<std::size_t>(it - b.nf->feature_names.begin());
            TaskSpec ts;
            ts.task_id = "feature:" + name;
            ts.kind = TaskKind::regression;
            ts.target_provenance = name;
            ts.targets.reserve(b.locs.size());
            for (const auto& row : b.nf->values) ts.targets.push_back(row[k]);
            out.push_back(std::move(ts));
        } else {
            throw ValidationError("unknown eval task kind: " + kind);
        }
    }
    return out;
}

FeatureSet embedding_features(const std::string& out_dir, const PipelineConfig& cfg,
                              const LocationSet& locs) {
    const std::string path = out_dir + "/vectors.txt";
    if (!fs::exists(path))
        throw MissingArtifactError("missing " + path + "; run the train command first");
    verify_artifact_header(path, cfg);

    // provenance comes from the sources= list in the artifact header
    FeatureSet fs_out;
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    const auto pos = header.find("sources=");
    if (pos != std::string::npos)
        for (const auto& s : parse_string_list(header.substr(pos + 8)))
            fs_out.provenance.insert(s);

    LoadedVectors lv = load_vectors(path, VectorFormat::text);
    fs_out.rows.assign(locs.size(), {});
    for (std::size_t i = 0; i < lv.ids.size(); ++i) {
        auto it = locs.index_of.find(lv.ids[i]);
        if (it == locs.index_of.end())
            throw ValidationError(path + ": vector for unknown location " + lv.ids[i]);
        fs_out.rows[it->second] = lv.vectors[i];
    }
    for (std::size_t i = 0; i < fs_out.rows.size(); ++i)
        if (fs_out.rows[i].empty())
            throw ValidationError(path + ": no vector for location " +
                                  locs.locations[i].loc_id);
    return fs_out;
}

// BOW features for one task: the task's target source is left out
FeatureSet bow_features_for_task(const PipelineConfig& cfg, const CorpusBundle& b,
                                 const AssociationMatrix& m, const SplitSpec& split,
                                 const std::string& out_dir, const TaskSpec& task) {
    std::optional<std::vector<std::string>> selected;
    if (cfg.variant == Variant::bow_kl_tags) {
        const std::string path = out_dir + "/selection.tsv";
        if (!fs::exists(path))
            throw MissingArtifactError("missing " + path + "; run the select command first");
        verify_artifact_header(path, cfg);
        selected = read_selection_tsv(path);
    }
    std::optional<NumericalFeatureTable> nf;
    std::vector<CategoryAssignment> cats;
    if (cfg.variant == Variant::bow_all) {
        PipelineConfig task_cfg = cfg;
        task_cfg.exclude_sources.push_back(task.target_provenance);
        nf = training_nf(task_cfg, b, split);
        for (const auto& tax : b.categories)
            if (tax.taxonomy_id != task.target_provenance && !is_excluded(cfg, tax.taxonomy_id))
                cats.push_back(tax);
    }
    return bow_features(m, selected ? &*selected : nullptr, nf ? &*nf : nullptr,
                        cats.empty() ? nullptr : &cats);
}

EvalReport aggregate_reports(const std::vector<EvalReport>& reports, const std::string& id) {
    EvalReport agg;
    agg.task_id = id;
    agg.variant = reports.front().variant;
    agg.kind = reports.front().kind;
    for (const auto& r : reports) {
        agg.precision += r.precision / static_cast<double>(reports.size());
        agg.recall += r.recall / static_cast<double>(reports.size());
        agg.macro_f1 += r.macro_f1 / static_cast<double>(reports.size());
        agg.mae += r.mae / static_cast<double>(reports.size());
        agg.spearman += r.spearman / static_cast<double>(reports.size());
    }
    return agg;
}

}  // namespace

void cmd_eval(const PipelineConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    CorpusBundle b = load_corpus(cfg, /*need_records=*/false);
    const SplitSpec split = make_split(b.locs.size(), cfg.embed.seed);
    const auto tasks = expand_tasks(cfg, b);

    std::optional<AssociationMatrix> assoc;
    std::optional<FeatureSet> emb_features;
    if (variant_is_bow(cfg.variant)) {
        assoc = load_assoc_artifact(out_dir, cfg, b.locs);
    } else {
        emb_features = embedding_features(out_dir, cfg, b.locs);
    }

    std::vector<EvalReport> reports;
    for (const auto& task : tasks) {
        EvalReport rep;
        if (variant_is_bow(cfg.variant)) {
            const FeatureSet fsx = bow_features_for_task(cfg, b, *assoc, split, out_dir, task);
            rep = run_task(fsx, task, split);
        } else {
            rep = run_task(*emb_features, task, split);
        }
        rep.variant = variant_name(cfg.variant);
        reports.push_back(rep);
    }

    // aggregate per taxonomy family ("category:tax/xyz" -> "category:tax")
    std::map<std::string, std::vector<EvalReport>> families;
    for (const auto& r : reports) {
        const auto slash = r.task_id.find('/');
        if (slash != std::string::npos)
            families[r.task_id.substr(0, slash)].push_back(r);
    }

    std::ofstream out(out_dir + "/report.csv", std::ios::binary);
    out << cfg.artifact_header() << "\n" << EvalReport::csv_header() << "\n";
    for (const auto& r : reports) out << r.csv_line() << "\n";
    for (const auto& [family, rs] : families)
        out << aggregate_reports(rs, family).csv_line() << "\n";
}

void cmd_sweep(const PipelineConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    if (variant_is_bow(cfg.variant))
        throw ValidationError("sweep applies to embedding variants only");
    CorpusBundle b = load_corpus(cfg, /*need_records=*/false);
    AssociationMatrix m = load_assoc_artifact(out_dir, cfg, b.locs);
    const auto tasks = expand_tasks(cfg, b);
    if (tasks.empty()) throw ValidationError("sweep needs at least one eval task");

    std::optional<std::vector<std::string>> selected;
    if (variant_uses_selection(cfg.variant)) {
        const std::string path = out_dir + "/selection.tsv";
        if (!fs::exists(path))
            throw MissingArtifactError("missing " + path + "; run the select command first");
        verify_artifact_header(path, cfg);
        selected = read_selection_tsv(path);
    }

    const bool tune_ab = cfg.variant == Variant::egel_all;
    const std::vector<double> alphas = tune_ab ? cfg.sweep_alphas : std::vector<double>{1.0};
    const std::vector<double> betas = tune_ab ? cfg.sweep_betas : std::vector<double>{0.0};

    struct Combo {
        std::size_t dim;
        double alpha, beta, tune_score;
    };
    std::vector<Combo> combos;
    Combo best{0, 0, 0, -2.0};
    std::optional<EmbeddingModel> best_model;

    for (std::size_t dim : cfg.sweep_dims) {
        for (double alpha : alphas) {
            for (double beta : betas) {
                PipelineConfig c = cfg;
                c.embed.dim = dim;
                c.embed.alpha = alpha;
                c.embed.beta = beta;
                EmbedConfig ec = variant_embed_config(c);
                const SplitSpec split = make_split(b.locs.size(), ec.seed);
                std::optional<NumericalFeatureTable> nf;
                std::vector<CategoryAssignment> cats;
                if (cfg.variant == Variant::egel_all) {
                    nf = training_nf(c, b, split);
                    cats = training_categories(c, b);
                }
                TrainingPlan plan = build_training_plan(
                    m, selected ? &*selected : nullptr, nf ? &*nf : nullptr,
                    cats.empty() ? nullptr : &cats, ec);
                EmbeddingModel model = train(plan, ec);

                FeatureSet feats;
                feats.rows.assign(b.locs.size(), std::vector<double>(dim));
                for (std::size_t li = 0; li < b.locs.size(); ++li)
                    for (std::size_t d = 0; d < dim; ++d)
                        feats.rows[li][d] = model.loc_vector(li)[d];
                for (const auto& s : model_sources(c, nf, cats)) feats.provenance.insert(s);

                // selection score: first task family, tune split only
                const TaskSpec& task = tasks.front();
                if (!task.target_provenance.empty() &&
                    feats.provenance.count(task.target_provenance))
                    throw ValidationError("leakage: sweep target '" + task.target_provenance +
                                          "' is a model input; add it to exclude_sources");
                LinearProbe probe = train_probe(feats, task.targets, task.kind,
                                                {0.0, 0.01, 0.1, 1.0}, split);
                std::vector<double> preds, actual;
                for (std::size_t i : split.tune) {
                    preds.push_back(probe.predict(feats.rows[i]));
                    actual.push_back(task.targets[i]);
                }
                const double score = task.kind == TaskKind::classification
                                         ? macro_f1(preds, actual).f1
                                         : spearman_rho(preds, actual);
                combos.push_back({dim, alpha, beta, score});
                if (score > best.tune_score) {
                    best = {dim, alpha, beta, score};
                    best_model = std::move(model);
                }
            }
        }
    }

    // test metric is computed once, for the selected configuration only
    PipelineConfig c = cfg;
    c.embed.dim = best.dim;
    c.embed.alpha = best.alpha;
    c.embed.beta = best.beta;
    const SplitSpec split = make_split(b.locs.size(), cfg.embed.seed);
    FeatureSet feats;
    feats.rows.assign(b.locs.size(), std::vector<double>(best.dim));
    for (std::size_t li = 0; li < b.locs.size(); ++li)
        for (std::size_t d = 0; d < best.dim; ++d)
            feats.rows[li][d] = best_model->loc_vector(li)[d];
    const TaskSpec& task = tasks.front();
    EvalReport rep = run_task(feats, task, split);
    rep.variant = variant_name(cfg.variant);

    std::ofstream out(out_dir + "/sweep.csv", std::ios::binary);
    out << cfg.artifact_header() << "\n";
    out << "dim,alpha,beta,tune_score,selected\n";
    for (const auto& cb : combos)
        out << cb.dim << ',' << fmt_double(cb.alpha) << ',' << fmt_double(cb.beta) << ','
            << fmt_double(cb.tune_score) << ','
            << (cb.dim == best.dim && cb.alpha == best.alpha && cb.beta == best.beta ? 1 : 0)
            << "\n";
    out << "# test metric for the selected configuration\n";
    out << EvalReport::csv_header() << "\n" << rep.csv_line() << "\n";
}

}  // namespace geoembed
