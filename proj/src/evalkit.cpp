#include "geoembed/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "geoembed/util.hpp"

namespace geoembed {

SplitSpec make_split(std::size_t n, std::uint64_t seed) {
    if (n < 3) throw ValidationError("need at least 3 locations to split");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto sixth = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 6.0));
    SplitSpec s;
    s.test.assign(order.begin(), order.begin() + sixth);
    s.tune.assign(order.begin() + sixth, order.begin() + 2 * sixth);
    s.train.assign(order.begin() + 2 * sixth, order.end());
    return s;
}

std::string EvalReport::csv_header() {
    return "task,variant,kind,precision,recall,macro_f1,mae,spearman_rho,lambda";
}

std::string EvalReport::csv_line() const {
    return task_id + "," + variant + "," +
           (kind == TaskKind::classification ? "classification" : "regression") + "," +
           fmt_double(precision) + "," + fmt_double(recall) + "," + fmt_double(macro_f1) + "," +
           fmt_double(mae) + "," + fmt_double(spearman) + "," + fmt_double(chosen_lambda);
}

EvalReport EvalReport::from_csv_line(const std::string& line) {
    auto f = split(line, ',');
    if (f.size() != 9) throw ValidationError("bad report line: " + line);
    EvalReport r;
    r.task_id = f[0];
    r.variant = f[1];
    r.kind = f[2] == "classification" ? TaskKind::classification : TaskKind::regression;
    parse_double(f[3], r.precision);
    parse_double(f[4], r.recall);
    parse_double(f[5], r.macro_f1);
    parse_double(f[6], r.mae);
    parse_double(f[7], r.spearman);
    parse_double(f[8], r.chosen_lambda);
    return r;
}

double LinearProbe::raw(const std::vector<double>& x) const {
    double s = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
    return s;
}

double LinearProbe::predict(const std::vector<double>& x) const {
    const double s = raw(x);
    return kind == TaskKind::classification ? (s >= 0.0 ? 1.0 : 0.0) : s;
}

namespace {

// loss and gradient of the regularized objective; bias is the last slot of g
double loss_and_grad(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     TaskKind kind, double lambda, const std::vector<double>& w, double b,
                     std::vector<double>& g, double& gb) {
    const std::size_t d = w.size();
    std::fill(g.begin(), g.end(), 0.0);
    gb = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = b;
        for (std::size_t k = 0; k < d; ++k) s += w[k] * x[i][k];
        if (kind == TaskKind::classification) {
            const double yy = y[i] > 0.5 ? 1.0 : -1.0;
            const double m = yy * s;
            // log(1+exp(-m)) computed stably
            loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
            const double p = 1.0 / (1.0 + std::exp(m));
            const double c = -yy * p;
            for (std::size_t k = 0; k < d; ++k) g[k] += c * x[i][k];
            gb += c;
        } else {
            const double r = s - y[i];
            loss += r * r;
            for (std::size_t k = 0; k < d; ++k) g[k] += 2.0 * r * x[i][k];
            gb += 2.0 * r;
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        loss += lambda * w[k] * w[k];
        g[k] += 2.0 * lambda * w[k];
    }
    return loss;
}

}  // namespace

LinearProbe fit_probe(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                      TaskKind kind, double lambda) {
    if (x.empty()) throw ValidationError("empty training set for probe");
    const std::size_t d = x[0].size();
    LinearProbe p;
    p.kind = kind;
    p.lambda = lambda;
    p.weights.assign(d, 0.0);
    std::vector<double> g(d, 0.0), trial_g(d, 0.0);
    double gb = 0.0, trial_gb = 0.0;
    double step = 1.0;
    double loss = loss_and_grad(x, y, kind, lambda, p.weights, p.bias, g, gb);
    std::vector<double> trial(d);
    for (int it = 0; it < 10000; ++it) {
        double gnorm = gb * gb;
        for (double v : g) gnorm += v * v;
        if (std::sqrt(gnorm) < 1e-6) break;
        // backtracking line search on the descent direction -g
        double new_loss;
        double tb;
        while (true) {
            for (std::size_t k = 0; k < d; ++k) trial[k] = p.weights[k] - step * g[k];
            tb = p.bias - step * gb;
            new_loss = loss_and_grad(x, y, kind, lambda, trial, tb, trial_g, trial_gb);
            if (new_loss <= loss || step < 1e-16) break;
            step *= 0.5;
        }
        if (new_loss > loss) break;  // stalled at minimal step
        p.weights = trial;
        p.bias = tb;
        loss = new_loss;
        g = trial_g;
        gb = trial_gb;
        step *= 2.0;
    }
    return p;
}

namespace {

template <typename Pred>
std::vector<double> predict_rows(const LinearProbe& probe,
                                 const std::vector<std::vector<double>>& rows, Pred pred) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(pred(probe, r));
    return out;
}

std::vector<std::vector<double>> gather_rows(const std::vector<std::vector<double>>& all,
                                             const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

std::vector<double> gather(const std::vector<double>& all, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw ValidationError("spearman: size mismatch or empty input");
    const auto ra = ranks_with_ties(pred);
    const auto rb = ranks_with_ties(actual);
    const std::size_t n = ra.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

double mae(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw ValidationError("mae: size mismatch or empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - actual[i]);
    return s / static_cast<double>(pred.size());
}

F1Result macro_f1(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw ValidationError("macro_f1: size mismatch or empty input");
    F1Result out;
    for (int cls = 0; cls <= 1; ++cls) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool p = (pred[i] > 0.5) == (cls == 1);
            const bool a = (actual[i] > 0.5) == (cls == 1);
            if (p && a) ++tp;
            else if (p && !a) ++fp;
            else if (!p && a) ++fn;
        }
        const double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        out.precision += prec / 2.0;
        out.recall += rec / 2.0;
        out.f1 += f1 / 2.0;
    }
    return out;
}

LinearProbe train_probe(const FeatureSet& features, const std::vector<double>& targets,
                        TaskKind kind, const std::vector<double>& reg_grid,
                        const SplitSpec& split) {
    if (reg_grid.empty()) throw ValidationError("empty regularization grid");
    const auto x_train = gather_rows(features.rows, split.train);
    const auto y_train = gather(targets, split.train);
    const auto x_tune = gather_rows(features.rows, split.tune);
    const auto y_tune = gather(targets, split.tune);
    LinearProbe best;
    double best_score = -2.0;
    for (double lambda : reg_grid) {
        LinearProbe probe = fit_probe(x_train, y_train, kind, lambda);
        auto preds = predict_rows(probe, x_tune, [](const LinearProbe& p, const auto& r) {
            return p.predict(r);
        });
        const double score = kind == TaskKind::classification
                                 ? macro_f1(preds, y_tune).f1
                                 : spearman_rho(preds, y_tune);
        if (score > best_score) {
            best_score = score;
            best = std::move(probe);
        }
    }
    return best;
}

EvalReport run_task(const FeatureSet& features, const TaskSpec& task, const SplitSpec& split,
                    const std::vector<double>& reg_grid) {
    if (!task.target_provenance.empty() && features.provenance.count(task.target_provenance))
        throw ValidationError("leakage: task '" + task.task_id + "' target '" +
                              task.target_provenance + "' is among the feature sources");
    if (features.rows.size() != task.targets.size())
        throw ValidationError("task '" + task.task_id + "': feature/target size mismatch");

    LinearProbe probe = train_probe(features, task.targets, task.kind, reg_grid, split);
    const auto x_test = gather_rows(features.rows, split.test);
    const auto y_test = gather(task.targets, split.test);
    auto preds = predict_rows(probe, x_test, [](const LinearProbe& p, const auto& r) {
        return p.predict(r);
    });

    EvalReport rep;
    rep.task_id = task.task_id;
    rep.kind = task.kind;
    rep.chosen_lambda = probe.lambda;
    if (task.kind == TaskKind::classification) {
        const F1Result f = macro_f1(preds, y_test);
        rep.precision = f.precision;
        rep.recall = f.recall;
        rep.macro_f1 = f.f1;
    } else {
        rep.mae = mae(preds, y_test);
        rep.spearman = spearman_rho(preds, y_test);
    }
    return rep;
}

FeatureSet bow_features(const AssociationMatrix& assoc,
                        const std::vector<std::string>* selected,
                        const NumericalFeatureTable* nf_table,
                        const std::vector<CategoryAssignment>* categories) {
    FeatureSet fs;
    fs.provenance.insert("tags");

    std::vector<std::int64_t> col_of(assoc.n_tags(), -1);
    std::size_t n_tag_cols = 0;
    if (selected) {
        std::set<std::string> keep(selected->begin(), selected->end());
        for (std::uint32_t t = 0; t < assoc.n_tags(); ++t)
            if (keep.count(assoc.tags[t])) col_of[t] = static_cast<std::int64_t>(n_tag_cols++);
    } else {
        for (std::uint32_t t = 0; t < assoc.n_tags(); ++t)
            col_of[t] = static_cast<std::int64_t>(n_tag_cols++);
    }

    std::size_t n_cat_cols = 0;
    std::vector<std::pair<const CategoryAssignment*, std::size_t>> cat_cols;
    if (categories) {
        for (const auto& tax : *categories) {
            fs.provenance.insert(tax.taxonomy_id);
            cat_cols.emplace_back(&tax, n_cat_cols);
            n_cat_cols += tax.members.size();
        }
    }
    std::size_t n_nf_cols = 0;
    if (nf_table) {
        if (nf_table->normalized.empty())
            throw ValidationError("feature table must be normalized before bow_features");
        n_nf_cols = nf_table->n_features();
        for (const auto& name : nf_table->feature_names) fs.provenance.insert(name);
    }

    const std::size_t width = n_tag_cols + n_nf_cols + n_cat_cols;
    fs.rows.assign(assoc.n_locations(), std::vector<double>(width, 0.0));
    for (std::size_t li = 0; li < assoc.n_locations(); ++li) {
        auto& row = fs.rows[li];
        for (const auto& e : assoc.rows[li])
            if (col_of[e.tag] >= 0) row[static_cast<std::size_t>(col_of[e.tag])] = e.ppmi;
        if (nf_table)
            for (std::size_t k = 0; k < n_nf_cols; ++k)
                row[n_tag_cols + k] = nf_table->normalized[li][k];
    }
    for (const auto& [tax, base] : cat_cols) {
        std::size_t c = 0;
        for (const auto& [cat, locs] : tax->members) {
            for (std::size_t li : locs) fs.rows[li][n_tag_cols + n_nf_cols + base + c] = 1.0;
            ++c;
        }
    }
    return fs;
}

double knn_purity(const std::vector<std::vector<double>>& vectors,
                  const std::vector<int>& labels) {
    if (vectors.size() != labels.size() || vectors.size() < 2)
        throw ValidationError("knn_purity: bad input sizes");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        double best = 0.0;
        std::size_t best_j = vectors.size();
        for (std::size_t j = 0; j < vectors.size(); ++j) {
            if (j == i) continue;
            double d = 0.0;
            for (std::size_t k = 0; k < vectors[i].size(); ++k) {
                const double diff = vectors[i][k] - vectors[j][k];
                d += diff * diff;
            }
            if (best_j == vectors.size() || d < best) {
                best = d;
                best_j = j;
            }
        }
        if (labels[best_j] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(vectors.size());
}

double intra_inter_ratio(const std::vector<std::vector<double>>& vectors,
                         const std::vector<int>& labels) {
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < vectors[i].size(); ++k) {
                const double diff = vectors[i][k] - vectors[j][k];
                d += diff * diff;
            }
            d = std::sqrt(d);
            if (labels[i] == labels[j]) {
                intra += d;
                ++n_intra;
            } else {
                inter += d;
                ++n_inter;
            }
        }
    }
    if (n_intra == 0 || n_inter == 0 || inter == 0.0)
        throw ValidationError("intra_inter_ratio: degenerate labelling");
    return (intra / static_cast<double>(n_intra)) / (inter / static_cast<double>(n_inter));
}

}  // namespace geoembed
