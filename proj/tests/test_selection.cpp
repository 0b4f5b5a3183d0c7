#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geoembed/selection.hpp"

using namespace geoembed;

namespace {

// dense w matrix -> AssociationMatrix, bypassing the spatial pipeline
AssociationMatrix make_assoc(const std::vector<std::vector<double>>& w) {
    AssociationMatrix m;
    const std::size_t n_loc = w.size(), n_tag = w[0].size();
    for (std::size_t i = 0; i < n_loc; ++i) m.loc_ids.push_back("l" + std::to_string(i));
    for (std::size_t t = 0; t < n_tag; ++t) {
        m.tags.push_back("t" + std::string(t < 10 ? "0" : "") + std::to_string(t));
        m.tag_index[m.tags.back()] = static_cast<std::uint32_t>(t);
    }
    m.rows.assign(n_loc, {});
    m.tag_weight_sum.assign(n_tag, 0.0);
    m.loc_weight_sum.assign(n_loc, 0.0);
    for (std::size_t i = 0; i < n_loc; ++i) {
        for (std::size_t t = 0; t < n_tag; ++t) {
            if (w[i][t] <= 0.0) continue;
            m.rows[i].push_back({static_cast<std::uint32_t>(t), w[i][t], 0.0, 1});
            m.tag_weight_sum[t] += w[i][t];
            m.loc_weight_sum[i] += w[i][t];
            m.total_weight += w[i][t];
        }
    }
    for (std::size_t i = 0; i < n_loc; ++i)
        for (auto& e : m.rows[i])
            e.ppmi = std::max(0.0, std::log(e.w * m.total_weight /
                                            (m.tag_weight_sum[e.tag] * m.loc_weight_sum[i])));
    return m;
}

CategoryAssignment two_classes(std::set<std::size_t> a, std::set<std::size_t> b) {
    CategoryAssignment c;
    c.taxonomy_id = "tax";
    c.members["A"] = std::move(a);
    c.members["B"] = std::move(b);
    return c;
}

// independent naive KL with renormalized smoothed posterior
std::vector<double> naive_kl(const std::vector<std::vector<double>>& w,
                             const std::vector<std::vector<std::size_t>>& classes,
                             double gamma) {
    const std::size_t n_tag = w[0].size(), n_cls = classes.size();
    std::vector<double> cls_mass(n_cls, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c)
        for (std::size_t l : classes[c])
            for (std::size_t t = 0; t < n_tag; ++t) {
                cls_mass[c] += w[l][t];
                total += w[l][t];
            }
    std::vector<double> q(n_cls);
    for (std::size_t c = 0; c < n_cls; ++c) q[c] = cls_mass[c] / total;
    std::vector<double> out(n_tag, 0.0);
    for (std::size_t t = 0; t < n_tag; ++t) {
        std::vector<double> p(n_cls);
        double s = 0.0;
        for (std::size_t c = 0; c < n_cls; ++c) {
            double wc = 0.0;
            for (std::size_t l : classes[c]) wc += w[l][t];
            p[c] = (wc + gamma * q[c]) / (total + gamma);
            s += p[c];
        }
        for (std::size_t c = 0; c < n_cls; ++c) {
            p[c] /= s;
            if (p[c] > 0.0) out[t] += p[c] * std::log(p[c] / q[c]);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("class_priors: equal, 3:1, and zero-mass classes") {
    auto m = make_assoc({{1.0, 1.0}, {1.0, 1.0}});
    auto cw = class_priors(m, two_classes({0}, {1}));
    CHECK(cw.q[0] == doctest::Approx(0.5));
    CHECK(cw.q[1] == doctest::Approx(0.5));
    CHECK(cw.q[0] + cw.q[1] == doctest::Approx(1.0).epsilon(1e-9));

    auto m2 = make_assoc({{3.0, 0.0}, {1.0, 0.0}});
    auto cw2 = class_priors(m2, two_classes({0}, {1}));
    CHECK(cw2.q[0] == doctest::Approx(0.75));
    CHECK(cw2.q[1] == doctest::Approx(0.25));

    CategoryAssignment three;
    three.taxonomy_id = "tax";
    three.members["A"] = {0};
    three.members["B"] = {1};
    three.members["C"] = {2};
    auto m3 = make_assoc({{2.0}, {2.0}, {0.0}});
    auto cw3 = class_priors(m3, three);
    CHECK(cw3.q[2] == 0.0);
    CHECK(cw3.q[0] + cw3.q[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("smoothed_posterior: raw formula on the 2-class toy") {
    // class sums for t00 are (4, 1); loc sums are (5, 5) so Q = (.5, .5), mass 10
    auto m = make_assoc({{4.0, 1.0}, {1.0, 4.0}});
    auto cw = class_priors(m, two_classes({0}, {1}));
    REQUIRE(cw.total_mass == doctest::Approx(10.0));
    auto p = smoothed_posterior(m, 0, cw, 1.0, /*renormalize=*/false);
    CHECK(p[0] == doctest::Approx(4.5 / 11.0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.5 / 11.0).epsilon(1e-12));
}

TEST_CASE("smoothed_posterior: zero-weight tag and large-gamma limit pull to prior") {
    auto m = make_assoc({{3.0, 0.0}, {1.0, 0.0}});
    auto cw = class_priors(m, two_classes({0}, {1}));
    // t01 has zero weight everywhere: posterior is exactly the prior
    auto p0 = smoothed_posterior(m, 1, cw, 7.0, true);
    CHECK(p0[0] == doctest::Approx(cw.q[0]).epsilon(1e-12));
    CHECK(p0[1] == doctest::Approx(cw.q[1]).epsilon(1e-12));
    // gamma -> infinity: every tag's posterior approaches the prior
    auto p1 = smoothed_posterior(m, 0, cw, 1e12, true);
    CHECK(p1[0] == doctest::Approx(cw.q[0]).epsilon(1e-6));
}

TEST_CASE("kl_select: prior-equal tags score 0, concentrated tags approach log n") {
    // t00 uniform across classes, t01 fully in class A
    auto m = make_assoc({{2.0, 3.0}, {2.0, 0.0}});
    SelectionConfig cfg;
    cfg.gamma = 1e-9;
    cfg.top_k = 2;
    auto res = kl_select(m, two_classes({0}, {1}), cfg);
    REQUIRE(res.scored.size() == 2);
    CHECK(res.scored[0].first == "t01");
    // fully concentrated in one of two classes with Q = (5/7, 2/7):
    // gamma -> 0 gives KL -> log(1/Q_A)
    const double qa = 5.0 / 7.0;
    CHECK(res.scored[0].second == doctest::Approx(std::log(1.0 / qa)).epsilon(1e-6));

    // with equiprobable classes the limit is log 2
    auto meq = make_assoc({{2.0, 2.0, 0.0}, {2.0, 0.0, 2.0}});
    auto req = kl_select(meq, two_classes({0}, {1}), cfg);
    CHECK(req.scored[0].second == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    // a tag whose posterior equals the prior scores 0
    for (const auto& [tag, score] : req.scored)
        if (tag == "t00") CHECK(score == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kl_select: matches naive oracle on random instances") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unif(0.0, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<double>> w(6, std::vector<double>(20));
        for (auto& row : w)
            for (auto& v : row) v = rng() % 3 == 0 ? 0.0 : unif(rng);
        AssociationMatrix m = make_assoc(w);
        CategoryAssignment cls;
        cls.taxonomy_id = "tax";
        cls.members["A"] = {0, 1};
        cls.members["B"] = {2, 3};
        cls.members["C"] = {4, 5};
        SelectionConfig cfg;
        cfg.gamma = 10.0;
        cfg.top_k = 20;
        auto res = kl_select(m, cls, cfg);
        auto oracle = naive_kl(w, {{0, 1}, {2, 3}, {4, 5}}, 10.0);
        for (const auto& [tag, score] : res.scored) {
            const std::size_t t = m.tag_index.at(tag);
            CHECK(std::abs(score - oracle[t]) < 1e-10);
            CHECK(score >= -1e-12);
        }
    }
}

TEST_CASE("kl_select: monotone in class imbalance at fixed total weight") {
    // tags come in mirrored pairs so both locations have equal mass
    std::vector<std::vector<double>> w(2);
    std::vector<double> splits{5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    for (double s : splits) {
        w[0].push_back(s);
        w[1].push_back(10.0 - s);
        w[0].push_back(10.0 - s);
        w[1].push_back(s);
    }
    auto m = make_assoc(w);
    SelectionConfig cfg;
    cfg.gamma = 0.5;
    cfg.top_k = w[0].size();
    auto res = kl_select(m, two_classes({0}, {1}), cfg);
    std::map<std::string, double> score;
    for (const auto& [tag, s] : res.scored) score[tag] = s;
    double prev = -1.0;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const double s = score["t" + std::string(2 * i < 10 ? "0" : "") +
                               std::to_string(2 * i)];
        CHECK(s >= prev - 1e-12);
        prev = s;
    }
}

TEST_CASE("kl_select: K covers all tags, K=0 fatal, tie-break stable") {
    auto m = make_assoc({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
    SelectionConfig cfg;
    cfg.top_k = 3;
    auto res = kl_select(m, two_classes({0}, {1}), cfg);
    CHECK(res.selected.size() == 3);
    // all posteriors equal the prior here, so ordering falls back to total
    // weight descending
    CHECK(res.scored[0].first == "t02");
    CHECK(res.scored[1].first == "t01");
    CHECK(res.scored[2].first == "t00");

    cfg.top_k = 0;
    CHECK_THROWS(kl_select(m, two_classes({0}, {1}), cfg));
}

TEST_CASE("kl_select: needs two classes with positive prior") {
    auto m = make_assoc({{1.0}, {0.0}});
    CHECK_THROWS(kl_select(m, two_classes({0}, {1}), SelectionConfig{}));
}

TEST_CASE("discretize_targets: cutoffs split into bins") {
    auto c = discretize_targets({1.0, 5.0, 9.0, 3.0}, {3.0, 7.0});
    CHECK(c.members.at("bin0") == std::set<std::size_t>{0});
    CHECK(c.members.at("bin1") == std::set<std::size_t>{1, 3});
    CHECK(c.members.at("bin2") == std::set<std::size_t>{2});
}
