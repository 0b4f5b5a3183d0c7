#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "geoembed/evalkit.hpp"
#include "geoembed/util.hpp"
#include "test_helpers.hpp"

using namespace geoembed;

namespace {

// rank with average ties, then plain Pearson on the ranks
double naive_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (i + j) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0 || db == 0) return 0.0;
    return num / std::sqrt(da * db);
}

double naive_mae(const std::vector<double>& p, const std::vector<double>& a) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - a[i]);
    return s / p.size();
}

}  // namespace

TEST_CASE("make_split: sizes, disjointness, coverage") {
    for (std::size_t n : {6u, 7u, 11u, 600u}) {
        auto s = make_split(n, 3);
        CHECK(s.train.size() + s.test.size() + s.tune.size() == n);
        // sizes within one of the exact 2/3, 1/6, 1/6 proportions
        CHECK(std::abs(static_cast<double>(s.test.size()) - n / 6.0) <= 1.0);
        CHECK(std::abs(static_cast<double>(s.tune.size()) - n / 6.0) <= 1.0);
        CHECK(std::abs(static_cast<double>(s.train.size()) - 2.0 * n / 3.0) <= 1.0);
        std::set<std::size_t> all;
        for (auto v : {&s.train, &s.test, &s.tune})
            for (std::size_t i : *v) CHECK(all.insert(i).second);
        CHECK(all.size() == n);
    }
    auto s6 = make_split(6, 0);
    CHECK(s6.train.size() == 4);
    CHECK(s6.test.size() == 1);
    CHECK(s6.tune.size() == 1);
    auto s600 = make_split(600, 0);
    CHECK(s600.train.size() == 400);
    CHECK(s600.test.size() == 100);
    CHECK(s600.tune.size() == 100);
    CHECK_THROWS(make_split(2, 0));
}

TEST_CASE("make_split: seeded and deterministic") {
    auto a = make_split(50, 9);
    auto b = make_split(50, 9);
    auto c = make_split(50, 10);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(a.train != c.train);
}

TEST_CASE("spearman: hand-checked 0.8 case and perfect correlations") {
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(spearman_rho({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3}, {30, 20, 10}) == doctest::Approx(-1.0));
    // monotone transform leaves rho at 1
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 4, 9, 16}) == doctest::Approx(1.0));
    // constant input has no ranking: defined as 0
    CHECK(spearman_rho({1, 1, 1}, {1, 2, 3}) == 0.0);
}

TEST_CASE("spearman and mae: match naive implementations on random data") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-10, 10);
    std::uniform_int_distribution<int> tie(0, 4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(30), b(30);
        for (auto& v : a) v = tie(rng) == 0 ? 1.0 : unif(rng);  // inject ties
        for (auto& v : b) v = unif(rng);
        CHECK(std::abs(spearman_rho(a, b) - naive_spearman(a, b)) < 1e-9);
        CHECK(std::abs(mae(a, b) - naive_mae(a, b)) < 1e-9);
    }
}

TEST_CASE("macro_f1: perfect, all-wrong, and asymmetric cases") {
    auto perfect = macro_f1({1, 0, 1, 0}, {1, 0, 1, 0});
    CHECK(perfect.f1 == doctest::Approx(1.0));
    CHECK(perfect.precision == doctest::Approx(1.0));
    CHECK(perfect.recall == doctest::Approx(1.0));

    auto wrong = macro_f1({0, 1, 0, 1}, {1, 0, 1, 0});
    CHECK(wrong.f1 == doctest::Approx(0.0));

    // pred = (1,1,1,0), actual = (1,0,1,0)
    // class 1: P=2/3, R=1, F1=0.8 ; class 0: P=1, R=1/2, F1=2/3
    auto mixed = macro_f1({1, 1, 1, 0}, {1, 0, 1, 0});
    CHECK(mixed.precision == doctest::Approx((2.0 / 3 + 1.0) / 2).epsilon(1e-12));
    CHECK(mixed.recall == doctest::Approx((1.0 + 0.5) / 2).epsilon(1e-12));
    CHECK(mixed.f1 == doctest::Approx((0.8 + 2.0 / 3) / 2).epsilon(1e-12));

    // degenerate: classifier never predicts the positive class
    auto none = macro_f1({0, 0, 0, 0}, {1, 0, 1, 0});
    CHECK(none.f1 < 0.5);
    CHECK(std::isfinite(none.f1));
}

TEST_CASE("fit_probe: separable classification reaches F1 = 1") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        const double cls = i % 2;
        x.push_back({cls * 4.0 - 2.0 + noise(rng), noise(rng)});
        y.push_back(cls);
    }
    auto probe = fit_probe(x, y, TaskKind::classification, 0.0);
    std::vector<double> pred;
    for (const auto& row : x) pred.push_back(probe.predict(row));
    CHECK(macro_f1(pred, y).f1 == doctest::Approx(1.0));
}

TEST_CASE("fit_probe: exact linear regression target recovered") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-3, 3);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        x.push_back({unif(rng), unif(rng)});
        y.push_back(2.0 * x.back()[0] - 1.5 * x.back()[1] + 0.5);
    }
    auto probe = fit_probe(x, y, TaskKind::regression, 0.0);
    std::vector<double> pred;
    for (const auto& row : x) pred.push_back(probe.predict(row));
    CHECK(mae(pred, y) < 1e-3);
    CHECK(probe.weights[0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(probe.weights[1] == doctest::Approx(-1.5).epsilon(1e-3));
}

TEST_CASE("fit_probe: regularization shrinks weights but not the bias") {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(-2, 2);
    for (int i = 0; i < 40; ++i) {
        x.push_back({unif(rng)});
        y.push_back(3.0 * x.back()[0] + 5.0);
    }
    auto loose = fit_probe(x, y, TaskKind::regression, 0.0);
    auto tight = fit_probe(x, y, TaskKind::regression, 10.0);
    CHECK(std::abs(tight.weights[0]) < std::abs(loose.weights[0]));
    // the intercept still absorbs the offset
    CHECK(tight.bias > 2.0);
}

TEST_CASE("run_task: leakage between features and target is fatal") {
    FeatureSet fs;
    fs.provenance = {"tags", "category:region"};
    for (int i = 0; i < 12; ++i) fs.rows.push_back({static_cast<double>(i)});
    TaskSpec task;
    task.task_id = "region";
    task.kind = TaskKind::classification;
    task.targets.assign(12, 0.0);
    for (int i = 0; i < 6; ++i) task.targets[i] = 1.0;
    task.target_provenance = "category:region";
    auto split = make_split(12, 1);
    CHECK_THROWS_AS(run_task(fs, task, split), ValidationError);
    // same features are fine for an unrelated target
    task.target_provenance = "category:other";
    CHECK_NOTHROW(run_task(fs, task, split));
}

TEST_CASE("run_task: end-to-end classification on separable features") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.2);
    FeatureSet fs;
    fs.provenance = {"embedding"};
    TaskSpec task;
    task.task_id = "toy";
    task.kind = TaskKind::classification;
    task.target_provenance = "category:toy";
    for (int i = 0; i < 60; ++i) {
        const double cls = i % 2;
        fs.rows.push_back({cls * 3.0 + noise(rng), noise(rng)});
        task.targets.push_back(cls);
    }
    auto split = make_split(60, 2);
    auto report = run_task(fs, task, split);
    CHECK(report.macro_f1 == doctest::Approx(1.0));
    CHECK(report.kind == TaskKind::classification);
}

TEST_CASE("run_task: regression report carries mae and rho") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unif(-2, 2);
    FeatureSet fs;
    fs.provenance = {"embedding"};
    TaskSpec task;
    task.task_id = "lin";
    task.kind = TaskKind::regression;
    task.target_provenance = "feature:lin";
    for (int i = 0; i < 60; ++i) {
        fs.rows.push_back({unif(rng), unif(rng)});
        task.targets.push_back(1.5 * fs.rows.back()[0] - 0.5 * fs.rows.back()[1]);
    }
    auto report = run_task(fs, task, make_split(60, 3));
    CHECK(report.mae < 1e-2);
    CHECK(report.spearman > 0.99);
}

TEST_CASE("EvalReport: csv round trip") {
    EvalReport r;
    r.task_id = "taskA";
    r.variant = "egel-all";
    r.kind = TaskKind::regression;
    r.mae = 0.25;
    r.spearman = 0.75;
    r.chosen_lambda = 0.01;
    auto back = EvalReport::from_csv_line(r.csv_line());
    CHECK(back.task_id == r.task_id);
    CHECK(back.variant == r.variant);
    CHECK(back.kind == TaskKind::regression);
    CHECK(back.mae == doctest::Approx(0.25));
    CHECK(back.spearman == doctest::Approx(0.75));
    CHECK(back.chosen_lambda == doctest::Approx(0.01));
}

TEST_CASE("bow_features: rows carry PPMI values and provenance tags") {
    std::mt19937_64 rng(11);
    auto assoc = testutil::make_assoc(testutil::random_w(4, 6, rng));
    auto fs = bow_features(assoc, nullptr, nullptr, nullptr);
    REQUIRE(fs.rows.size() == 4);
    REQUIRE(fs.rows[0].size() == 6);
    CHECK(fs.provenance == std::set<std::string>{"tags"});
    for (std::size_t li = 0; li < 4; ++li)
        for (const auto& e : assoc.rows[li])
            CHECK(fs.rows[li][e.tag] == doctest::Approx(e.ppmi));

    // with a selection the columns shrink to the selected vocabulary
    std::vector<std::string> keep{"t01", "t04"};
    auto sel = bow_features(assoc, &keep, nullptr, nullptr);
    CHECK(sel.rows[0].size() == 2);

    // numerical features and categories extend the rows and the provenance
    NumericalFeatureTable nf;
    nf.feature_names = {"pop"};
    for (int i = 0; i < 4; ++i) nf.values.push_back({static_cast<double>(i)});
    nf.normalize({0, 1, 2, 3});
    CategoryAssignment ca;
    ca.taxonomy_id = "kind";
    ca.members["a"] = {0, 1};
    ca.members["b"] = {2, 3};
    std::vector<CategoryAssignment> cats{ca};
    auto full = bow_features(assoc, nullptr, &nf, &cats);
    CHECK(full.rows[0].size() == 6 + 1 + 2);
    CHECK(full.provenance.count("pop"));
    CHECK(full.provenance.count("kind"));
    // one-hot block sums to one per row
    for (const auto& row : full.rows) CHECK(row[7] + row[8] == doctest::Approx(1.0));
}

TEST_CASE("knn_purity and intra_inter_ratio on well-separated clusters") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<std::vector<double>> vecs;
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) {
            vecs.push_back({c * 5.0 + noise(rng), c * 5.0 + noise(rng)});
            labels.push_back(c);
        }
    CHECK(knn_purity(vecs, labels) == doctest::Approx(1.0));
    CHECK(intra_inter_ratio(vecs, labels) < 0.2);

    // shuffled labels destroy both signals
    std::vector<int> shuffled = labels;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(intra_inter_ratio(vecs, shuffled) > 0.5);
}
