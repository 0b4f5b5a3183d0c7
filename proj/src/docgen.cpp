#include "geoembed/docgen.hpp"

#include <cstdio>
#include <sstream>

#include "geoembed/corpus.hpp"
#include "geoembed/embed.hpp"
#include "geoembed/geoindex.hpp"
#include "geoembed/selection.hpp"
#include "geoembed/weighting.hpp"

namespace geoembed {

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// the corpus traced by the document; also used by the snapshot tests
struct WorkedExample {
    std::vector<TagRecord> records;
    LocationSet locs;
    CategoryAssignment classes;

    WorkedExample() {
        auto add_loc = [&](const std::string& id, double lat, double lon) {
            locs.index_of[id] = locs.locations.size();
            locs.locations.push_back({id, lat, lon});
        };
        add_loc("la", 50.0, 0.0);
        add_loc("lb", 50.0, 0.1);
        add_loc("lc", 50.1, 0.0);

        const double km = 1.0 / kKmPerDegree;  // one km as a latitude offset
        auto add_rec = [&](const std::string& user, const std::string& tag, double lat,
                           double lon) {
            records.push_back({"r" + std::to_string(records.size() + 1), user, tag, lat, lon});
        };
        add_rec("u1", "beach", 50.0, 0.0);
        add_rec("u2", "beach", 50.0, 0.0);
        add_rec("u1", "sea", 50.0 + 0.5 * km, 0.0);
        add_rec("u3", "forest", 50.0, 0.1);
        add_rec("u3", "tree", 50.0, 0.1);
        add_rec("u4", "forest", 50.0 + 1.0 * km, 0.1);
        add_rec("u5", "mountain", 50.1, 0.0);
        add_rec("u6", "rock", 50.1, 0.0);
        add_rec("u6", "sea", 50.1 + 0.3 * km, 0.0);

        classes.taxonomy_id = "terrain";
        classes.members["coast"] = {0};
        classes.members["inland"] = {1, 2};
    }
};

}  // namespace

std::string render_worked_example() {
    WorkedExample ex;
    const double D = 1.0, sigma = D / 3.0;
    AssociationMatrix m = build_association_matrix(ex.records, ex.locs, D, sigma);

    std::ostringstream out;
    out << "# Worked example\n\n";
    out << "A three-location, six-tag corpus traced through every pipeline stage.\n";
    out << "All numbers below are generated by the code; the snapshot test fails if\n";
    out << "any formula implementation drifts.\n\n";

    out << "## Setup\n\n";
    out << "Locations (lat, lon):\n\n";
    for (const auto& l : ex.locs.locations)
        out << "- `" << l.loc_id << "` at (" << fmt6(l.lat) << ", " << fmt6(l.lon) << ")\n";
    out << "\nRecords (user, tag, offset north of its location):\n\n";
    out << "| record | user | tag | location |\n|---|---|---|---|\n";
    for (const auto& r : ex.records) {
        std::string nearest;
        double best = 1e18;
        for (const auto& l : ex.locs.locations) {
            const double d = haversine_km(r.lat, r.lon, l.lat, l.lon);
            if (d < best) {
                best = d;
                nearest = l.loc_id;
            }
        }
        out << "| " << r.record_id << " | " << r.user_id << " | " << r.tag << " | " << nearest
            << " (+" << fmt6(best) << " km) |\n";
    }
    out << "\nRadius D = " << fmt6(D) << " km, sigma = D/3 = " << fmt6(sigma) << " km.\n\n";

    out << "## Tag weights w(t,l)\n\n";
    out << "Each deduplicated record within D contributes exp(-d^2 / (2 sigma^2)).\n\n";
    out << "| location | tag | w(t,l) | PPMI(t,l) |\n|---|---|---|---|\n";
    for (std::size_t li = 0; li < m.n_locations(); ++li)
        for (const auto& e : m.rows[li])
            out << "| " << m.loc_ids[li] << " | " << m.tags[e.tag] << " | " << fmt6(e.w)
                << " | " << fmt6(e.ppmi) << " |\n";
    out << "\nTotal mass N = " << fmt6(m.total_weight) << ".\n\n";

    out << "## KL tag selection\n\n";
    out << "Classes: coast = {la}, inland = {lb, lc}; gamma = 1.\n\n";
    SelectionConfig scfg;
    scfg.gamma = 1.0;
    scfg.top_k = m.n_tags();
    SelectionResult sel = kl_select(m, ex.classes, scfg);
    ClassWeights cw = class_priors(m, ex.classes);
    out << "Class priors Q: ";
    for (std::size_t i = 0; i < cw.class_ids.size(); ++i)
        out << cw.class_ids[i] << " = " << fmt6(cw.q[i]) << (i + 1 < cw.q.size() ? ", " : "\n\n");
    out << "| tag | KL score |\n|---|---|\n";
    for (const auto& [tag, score] : sel.scored)
        out << "| " << tag << " | " << fmt6(score) << " |\n";

    out << "\n## One training iteration\n\n";
    EmbedConfig ec;
    ec.dim = 2;
    ec.seed = 7;
    ec.iterations = 1;
    ec.with_negatives = false;
    TrainingPlan plan = build_training_plan(m, nullptr, nullptr, nullptr, ec);
    EmbeddingModel before = init_model(plan, ec);
    const ObjectiveValue j0 = objective(before, plan);
    EmbeddingModel after = train(plan, ec);
    const ObjectiveValue j1 = after.objective_history.front();
    out << "Model: dim 2, seed 7, lr " << fmt6(ec.lr) << ", " << plan.pairs_positive.size()
        << " positive pairs, no negatives.\n\n";
    out << "- J at initialization: " << fmt6(j0.j) << "\n";
    out << "- J after one Adagrad iteration: " << fmt6(j1.j) << "\n";
    out << "- v_la before: (" << fmt6(before.loc_vector(0)[0]) << ", "
        << fmt6(before.loc_vector(0)[1]) << ")\n";
    out << "- v_la after: (" << fmt6(after.loc_vector(0)[0]) << ", "
        << fmt6(after.loc_vector(0)[1]) << ")\n";
    return out.str();
}

}  // namespace geoembed
