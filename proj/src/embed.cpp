#include "geoembed/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "geoembed/util.hpp"

namespace geoembed {

namespace {
constexpr double kAdagradEps = 1e-8;

double glove_f(double x, double xmax, double exponent) {
    return x >= xmax ? 1.0 : std::pow(x / xmax, exponent);
}
}  // namespace

TrainingPlan build_training_plan(const AssociationMatrix& assoc,
                                 const std::vector<std::string>* selected,
                                 const NumericalFeatureTable* nf_table,
                                 const std::vector<CategoryAssignment>* categories,
                                 const EmbedConfig& cfg) {
    TrainingPlan plan;
    plan.glove_mode = cfg.glove_mode;
    plan.loc_ids = assoc.loc_ids;

    // plan vocabulary: assoc order, optionally restricted to the selection
    std::vector<std::int64_t> assoc_to_plan(assoc.n_tags(), -1);
    if (selected) {
        std::unordered_set<std::string> keep(selected->begin(), selected->end());
        for (std::uint32_t t = 0; t < assoc.n_tags(); ++t) {
            if (keep.count(assoc.tags[t])) {
                assoc_to_plan[t] = static_cast<std::int64_t>(plan.tags.size());
                plan.tags.push_back(assoc.tags[t]);
            }
        }
    } else {
        plan.tags = assoc.tags;
        std::iota(assoc_to_plan.begin(), assoc_to_plan.end(), 0);
    }

    std::mt19937_64 rng(cfg.seed);
    const std::size_t vocab = plan.tags.size();
    for (std::uint32_t li = 0; li < assoc.n_locations(); ++li) {
        std::vector<std::uint32_t> positives;
        for (const auto& e : assoc.rows[li]) {
            const std::int64_t pt = assoc_to_plan[e.tag];
            if (pt < 0) continue;
            const auto t = static_cast<std::uint32_t>(pt);
            if (cfg.glove_mode) {
                if (e.count == 0) continue;
                const double x = static_cast<double>(e.count);
                plan.glove_pairs.push_back(
                    {li, t, glove_f(x, cfg.glove_xmax, cfg.glove_exponent), std::log(x)});
            } else {
                plan.pairs_positive.push_back({li, t, e.ppmi});
            }
            positives.push_back(t);
        }
        if (positives.empty()) {
            std::cerr << "warning: location " << assoc.loc_ids[li]
                      << " has no positive pairs, skipped in the tag loss\n";
            continue;
        }
        if (cfg.glove_mode || !cfg.with_negatives) continue;

        std::size_t need = std::min(cfg.negative_ratio * positives.size(), cfg.negative_cap);
        need = std::min(need, vocab - positives.size());
        if (need == 0) continue;
        std::unordered_set<std::uint32_t> pos_set(positives.begin(), positives.end());
        if (need * 2 >= vocab - positives.size()) {
            // dense case: shuffle the complement
            std::vector<std::uint32_t> candidates;
            candidates.reserve(vocab - positives.size());
            for (std::uint32_t t = 0; t < vocab; ++t)
                if (!pos_set.count(t)) candidates.push_back(t);
            std::shuffle(candidates.begin(), candidates.end(), rng);
            for (std::size_t i = 0; i < need; ++i)
                plan.pairs_negative.push_back({li, candidates[i], 0.0});
        } else {
            std::unordered_set<std::uint32_t> drawn;
            std::uniform_int_distribution<std::uint32_t> dist(
                0, static_cast<std::uint32_t>(vocab - 1));
            while (drawn.size() < need) {
                const std::uint32_t t = dist(rng);
                if (pos_set.count(t) || !drawn.insert(t).second) continue;
                plan.pairs_negative.push_back({li, t, 0.0});
            }
        }
    }

    if (!cfg.glove_mode && nf_table && nf_table->n_features() > 0) {
        if (nf_table->normalized.empty())
            throw ValidationError("feature table must be normalized before planning");
        plan.nf_names = nf_table->feature_names;
        for (std::uint32_t li = 0; li < assoc.n_locations(); ++li)
            for (std::uint32_t k = 0; k < nf_table->n_features(); ++k)
                plan.nf_terms.push_back({li, k, nf_table->normalized[li][k]});
    }

    if (!cfg.glove_mode && categories) {
        for (const auto& tax : *categories) {
            for (const auto& [cat, locs] : tax.members) {
                const auto c = static_cast<std::uint32_t>(plan.cat_ids.size());
                plan.cat_ids.push_back(tax.taxonomy_id + "/" + cat);
                for (std::size_t li : locs)
                    plan.cat_terms.push_back({static_cast<std::uint32_t>(li), c});
            }
        }
    }
    return plan;
}

ObjectiveValue objective(const EmbeddingModel& model, const TrainingPlan& plan) {
    const std::size_t dim = model.dim;
    ObjectiveValue out;
    if (plan.glove_mode) {
        for (const auto& p : plan.glove_pairs) {
            const double* v = model.params.v.data() + p.loc * dim;
            const double* w = model.params.w_tag.data() + p.tag * dim;
            double r = model.params.b_loc[p.loc] + model.params.b_tag[p.tag] - p.log_x;
            for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
            out.j_tags += p.fx * r * r;
        }
        out.j = out.j_tags;
        return out;
    }
    auto tag_residual = [&](const TrainingPlan::TagPair& p) {
        const double* v = model.params.v.data() + p.loc * dim;
        const double* w = model.params.w_tag.data() + p.tag * dim;
        double r = model.params.b_tag[p.tag] - p.target;
        for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
        return r;
    };
    for (const auto& p : plan.pairs_positive) {
        const double r = tag_residual(p);
        out.j_tags += r * r;
    }
    for (const auto& p : plan.pairs_negative) {
        const double r = tag_residual(p);
        out.j_tags += r * r;
    }
    for (const auto& t : plan.nf_terms) {
        const double* v = model.params.v.data() + t.loc * dim;
        const double* w = model.params.w_nf.data() + t.feature * dim;
        double r = model.params.b_nf[t.feature] - t.score;
        for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
        out.j_nf += r * r;
    }
    for (const auto& t : plan.cat_terms) {
        const double* v = model.params.v.data() + t.loc * dim;
        const double* w = model.params.w_cat.data() + t.cat * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = v[d] - w[d];
            out.j_cat += diff * diff;
        }
    }
    out.j = model.alpha * out.j_tags + (1.0 - model.alpha) * out.j_nf + model.beta * out.j_cat;
    return out;
}

ParamSet gradients(const EmbeddingModel& model, const TrainingPlan& plan) {
    const std::size_t dim = model.dim;
    ParamSet g;
    g.v.assign(model.params.v.size(), 0.0);
    g.w_tag.assign(model.params.w_tag.size(), 0.0);
    g.b_tag.assign(model.params.b_tag.size(), 0.0);
    g.b_loc.assign(model.params.b_loc.size(), 0.0);
    g.w_nf.assign(model.params.w_nf.size(), 0.0);
    g.b_nf.assign(model.params.b_nf.size(), 0.0);
    g.w_cat.assign(model.params.w_cat.size(), 0.0);

    if (plan.glove_mode) {
        for (const auto& p : plan.glove_pairs) {
            const double* v = model.params.v.data() + p.loc * dim;
            const double* w = model.params.w_tag.data() + p.tag * dim;
            double r = model.params.b_loc[p.loc] + model.params.b_tag[p.tag] - p.log_x;
            for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
            const double c = 2.0 * p.fx * r;
            for (std::size_t d = 0; d < dim; ++d) {
                g.v[p.loc * dim + d] += c * w[d];
                g.w_tag[p.tag * dim + d] += c * v[d];
            }
            g.b_loc[p.loc] += c;
            g.b_tag[p.tag] += c;
        }
        return g;
    }

    auto accumulate_tag = [&](const TrainingPlan::TagPair& p) {
        const double* v = model.params.v.data() + p.loc * dim;
        const double* w = model.params.w_tag.data() + p.tag * dim;
        double r = model.params.b_tag[p.tag] - p.target;
        for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
        const double c = 2.0 * model.alpha * r;
        for (std::size_t d = 0; d < dim; ++d) {
            g.v[p.loc * dim + d] += c * w[d];
            g.w_tag[p.tag * dim + d] += c * v[d];
        }
        g.b_tag[p.tag] += c;
    };
    for (const auto& p : plan.pairs_positive) accumulate_tag(p);
    for (const auto& p : plan.pairs_negative) accumulate_tag(p);

    const double nf_weight = 1.0 - model.alpha;
    for (const auto& t : plan.nf_terms) {
        const double* v = model.params.v.data() + t.loc * dim;
        const double* w = model.params.w_nf.data() + t.feature * dim;
        double r = model.params.b_nf[t.feature] - t.score;
        for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
        const double c = 2.0 * nf_weight * r;
        for (std::size_t d = 0; d < dim; ++d) {
            g.v[t.loc * dim + d] += c * w[d];
            g.w_nf[t.feature * dim + d] += c * v[d];
        }
        g.b_nf[t.feature] += c;
    }
    for (const auto& t : plan.cat_terms) {
        const double* v = model.params.v.data() + t.loc * dim;
        const double* w = model.params.w_cat.data() + t.cat * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            const double c = 2.0 * model.beta * (v[d] - w[d]);
            g.v[t.loc * dim + d] += c;
            g.w_cat[t.cat * dim + d] -= c;
        }
    }
    return g;
}

EmbeddingModel init_model(const TrainingPlan& plan, const EmbedConfig& cfg) {
    if (cfg.dim == 0) throw ValidationError("dimension must be >= 1");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ValidationError("alpha must be in [0,1]");
    if (cfg.beta < 0.0) throw ValidationError("beta must be >= 0");
    EmbeddingModel m;
    m.dim = cfg.dim;
    m.alpha = cfg.alpha;
    m.beta = cfg.beta;
    m.seed = cfg.seed;
    m.glove_mode = cfg.glove_mode;
    m.glove_xmax = cfg.glove_xmax;
    m.glove_exponent = cfg.glove_exponent;
    m.loc_ids = plan.loc_ids;
    m.tags = plan.tags;
    m.nf_names = plan.nf_names;
    m.cat_ids = plan.cat_ids;

    std::mt19937_64 rng(cfg.seed);
    const double half = 0.5 / static_cast<double>(cfg.dim);
    std::uniform_real_distribution<double> dist(-half, half);
    auto fill = [&](std::vector<double>& x, std::size_t n) {
        x.resize(n);
        for (double& v : x) v = dist(rng);
    };
    fill(m.params.v, plan.loc_ids.size() * cfg.dim);
    fill(m.params.w_tag, plan.tags.size() * cfg.dim);
    fill(m.params.b_tag, plan.tags.size());
    fill(m.params.b_loc, plan.loc_ids.size());
    fill(m.params.w_nf, plan.nf_names.size() * cfg.dim);
    fill(m.params.b_nf, plan.nf_names.size());
    fill(m.params.w_cat, plan.cat_ids.size() * cfg.dim);

    m.accum.v.assign(m.params.v.size(), 0.0);
    m.accum.w_tag.assign(m.params.w_tag.size(), 0.0);
    m.accum.b_tag.assign(m.params.b_tag.size(), 0.0);
    m.accum.b_loc.assign(m.params.b_loc.size(), 0.0);
    m.accum.w_nf.assign(m.params.w_nf.size(), 0.0);
    m.accum.b_nf.assign(m.params.b_nf.size(), 0.0);
    m.accum.w_cat.assign(m.params.w_cat.size(), 0.0);
    return m;
}

namespace {

inline void adagrad_step(double& x, double& acc, double g, double lr) {
    acc += g * g;
    x -= lr * g / std::sqrt(acc + kAdagradEps);
}

// one stochastic update on a (location, context-vector, bias) triple
void update_pair(EmbeddingModel& m, std::uint32_t loc, double* w, double* acc_w, double& b,
                 double& acc_b, double target_minus, double scale, double lr,
                 double* extra_b = nullptr, double* extra_acc = nullptr) {
    const std::size_t dim = m.dim;
    double* v = m.params.v.data() + loc * dim;
    double* acc_v = m.accum.v.data() + loc * dim;
    double r = b - target_minus;
    if (extra_b) r += *extra_b;
    for (std::size_t d = 0; d < dim; ++d) r += v[d] * w[d];
    const double c = 2.0 * scale * r;
    for (std::size_t d = 0; d < dim; ++d) {
        const double gv = c * w[d];
        const double gw = c * v[d];
        adagrad_step(v[d], acc_v[d], gv, lr);
        adagrad_step(w[d], acc_w[d], gw, lr);
    }
    adagrad_step(b, acc_b, c, lr);
    if (extra_b) adagrad_step(*extra_b, *extra_acc, c, lr);
}

}  // namespace

EmbeddingModel train(const TrainingPlan& plan, const EmbedConfig& cfg) {
    if (cfg.iterations == 0) throw ValidationError("iterations must be >= 1");
    EmbeddingModel m = init_model(plan, cfg);
    const std::size_t dim = cfg.dim;

    // term stream: kind boundaries are positional, shuffled each epoch
    const std::size_t n_pos = plan.glove_mode ? plan.glove_pairs.size()
                                              : plan.pairs_positive.size();
    const std::size_t n_neg = plan.glove_mode ? 0 : plan.pairs_negative.size();
    const std::size_t n_nf = plan.glove_mode ? 0 : plan.nf_terms.size();
    const std::size_t n_cat = plan.glove_mode ? 0 : plan.cat_terms.size();
    std::vector<std::size_t> order(n_pos + n_neg + n_nf + n_cat);
    std::iota(order.begin(), order.end(), 0);

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            if (idx < n_pos) {
                if (plan.glove_mode) {
                    const auto& p = plan.glove_pairs[idx];
                    update_pair(m, p.loc, m.params.w_tag.data() + p.tag * dim,
                                m.accum.w_tag.data() + p.tag * dim, m.params.b_tag[p.tag],
                                m.accum.b_tag[p.tag], p.log_x, p.fx, cfg.lr,
                                &m.params.b_loc[p.loc], &m.accum.b_loc[p.loc]);
                } else {
                    const auto& p = plan.pairs_positive[idx];
                    update_pair(m, p.loc, m.params.w_tag.data() + p.tag * dim,
                                m.accum.w_tag.data() + p.tag * dim, m.params.b_tag[p.tag],
                                m.accum.b_tag[p.tag], p.target, m.alpha, cfg.lr);
                }
            } else if (idx < n_pos + n_neg) {
                const auto& p = plan.pairs_negative[idx - n_pos];
                update_pair(m, p.loc, m.params.w_tag.data() + p.tag * dim,
                            m.accum.w_tag.data() + p.tag * dim, m.params.b_tag[p.tag],
                            m.accum.b_tag[p.tag], p.target, m.alpha, cfg.lr);
            } else if (idx < n_pos + n_neg + n_nf) {
                const auto& t = plan.nf_terms[idx - n_pos - n_neg];
                update_pair(m, t.loc, m.params.w_nf.data() + t.feature * dim,
                            m.accum.w_nf.data() + t.feature * dim, m.params.b_nf[t.feature],
                            m.accum.b_nf[t.feature], t.score, 1.0 - m.alpha, cfg.lr);
            } else {
                const auto& t = plan.cat_terms[idx - n_pos - n_neg - n_nf];
                double* v = m.params.v.data() + t.loc * dim;
                double* acc_v = m.accum.v.data() + t.loc * dim;
                double* w = m.params.w_cat.data() + t.cat * dim;
                double* acc_w = m.accum.w_cat.data() + t.cat * dim;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double c = 2.0 * m.beta * (v[d] - w[d]);
                    adagrad_step(v[d], acc_v[d], c, cfg.lr);
                    adagrad_step(w[d], acc_w[d], -c, cfg.lr);
                }
            }
        }
        const ObjectiveValue jv = objective(m, plan);
        if (!std::isfinite(jv.j))
            throw ValidationError("non-finite objective at iteration " +
                                  std::to_string(iter + 1) +
                                  "; lower the learning rate (lr) and retry");
        m.objective_history.push_back(jv);
    }
    return m;
}

void export_vectors(const EmbeddingModel& model, const std::string& path, VectorFormat fmt,
                    const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    if (!header.empty()) out << header << '\n';
    out << model.loc_ids.size() << ' ' << model.dim << '\n';
    if (fmt == VectorFormat::text) {
        for (std::size_t i = 0; i < model.loc_ids.size(); ++i) {
            out << model.loc_ids[i];
            const double* v = model.loc_vector(i);
            for (std::size_t d = 0; d < model.dim; ++d) out << ' ' << fmt_double(v[d]);
            out << '\n';
        }
    } else {
        for (std::size_t i = 0; i < model.loc_ids.size(); ++i) {
            const auto len = static_cast<std::uint32_t>(model.loc_ids[i].size());
            out.write(reinterpret_cast<const char*>(&len), sizeof(len));
            out.write(model.loc_ids[i].data(), len);
            const double* v = model.loc_vector(i);
            for (std::size_t d = 0; d < model.dim; ++d) {
                const float f = static_cast<float>(v[d]);
                out.write(reinterpret_cast<const char*>(&f), sizeof(f));
            }
        }
    }
}

LoadedVectors load_vectors(const std::string& path, VectorFormat fmt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open vector file: " + path);
    LoadedVectors lv;
    std::string header;
    if (!std::getline(in, header)) throw ValidationError(path + ": missing vector header");
    if (!header.empty() && header[0] == '#') {
        // artifact provenance line precedes the count/dim header
        if (!std::getline(in, header)) throw ValidationError(path + ": missing vector header");
    }
    auto parts = split(header, ' ');
    long count = 0, dim = 0;
    if (parts.size() != 2 || !parse_long(parts[0], count) || !parse_long(parts[1], dim))
        throw ValidationError(path + ": bad vector header '" + header + "'");
    lv.dim = static_cast<std::size_t>(dim);
    if (fmt == VectorFormat::text) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto fields = split(line, ' ');
            if (fields.size() != lv.dim + 1)
                throw ValidationError(path + ": bad vector line for '" + fields[0] + "'");
            std::vector<double> vec(lv.dim);
            for (std::size_t d = 0; d < lv.dim; ++d)
                if (!parse_double(fields[d + 1], vec[d]))
                    throw ValidationError(path + ": bad number in vector line");
            lv.ids.push_back(fields[0]);
            lv.vectors.push_back(std::move(vec));
        }
    } else {
        for (long i = 0; i < count; ++i) {
            std::uint32_t len = 0;
            in.read(reinterpret_cast<char*>(&len), sizeof(len));
            std::string id(len, '\0');
            in.read(id.data(), len);
            std::vector<double> vec(lv.dim);
            for (std::size_t d = 0; d < lv.dim; ++d) {
                float f = 0.0f;
                in.read(reinterpret_cast<char*>(&f), sizeof(f));
                vec[d] = f;
            }
            if (!in) throw ValidationError(path + ": truncated binary vector file");
            lv.ids.push_back(std::move(id));
            lv.vectors.push_back(std::move(vec));
        }
    }
    if (lv.ids.size() != static_cast<std::size_t>(count))
        throw ValidationError(path + ": vector count does not match header");
    return lv;
}

void write_objective_csv(const EmbeddingModel& model, const std::string& path,
                         const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    if (!header.empty()) out << header << "\n";
    out << "iteration,J,J_tags,J_nf,J_cat\n";
    for (std::size_t i = 0; i < model.objective_history.size(); ++i) {
        const auto& jv = model.objective_history[i];
        out << (i + 1) << ',' << fmt_double(jv.j) << ',' << fmt_double(jv.j_tags) << ','
            << fmt_double(jv.j_nf) << ',' << fmt_double(jv.j_cat) << '\n';
    }
}

}  // namespace geoembed
