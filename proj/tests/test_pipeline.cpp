#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "geoembed/pipeline.hpp"
#include "geoembed/util.hpp"

using namespace geoembed;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// a small synthetic corpus plus a config file pointing at it
std::string write_smoke_config(const fs::path& dir, const std::string& variant,
                               const std::string& extra = "") {
    SynthConfig sc;
    sc.n_locations = 36;
    sc.n_clusters = 3;
    sc.tags_per_cluster = 6;
    sc.noise_tags = 4;
    sc.records_per_location = 12;
    sc.seed = 11;
    auto out = generate_synthetic(sc, dir.string());

    const auto cfg_path = dir / "run.cfg";
    std::ofstream cfg(cfg_path);
    cfg << "records=" << out.records_path << "\n"
        << "locations=" << out.locations_path << "\n"
        << "features=" << out.features_path << "\n"
        << "categories=" << out.categories_path << "\n"
        << "variant=" << variant << "\n"
        << "D=1.0\n"
        << "dim=4\n"
        << "iterations=5\n"
        << "seed=3\n"
        << "select_taxonomy=cluster\n"
        << "K=20\n"
        << "exclude_sources=cluster\n"
        << "eval_tasks=category:cluster\n"
        << extra;
    return cfg_path.string();
}

}  // namespace

TEST_CASE("variant names round trip") {
    for (const auto* name : {"glove", "egel-tags", "egel-tags-ns", "egel-kl-tags-ns",
                             "egel-all", "bow-tags", "bow-kl-tags", "bow-all"})
        CHECK(variant_name(parse_variant(name)) == name);
    CHECK_THROWS_AS(parse_variant("nope"), ValidationError);
}

TEST_CASE("config: parsing, defaults, and hash sensitivity") {
    const auto dir = fresh_dir("pipe_cfg");
    const auto path = dir / "a.cfg";
    {
        std::ofstream f(path);
        f << "# comment\n"
          << "records=r.tsv\n"
          << "D=2.0\n"
          << "alpha=0.25\n"
          << "variant=egel-all\n"
          << "cutoffs=1.5,2.5\n";
    }
    auto cfg = PipelineConfig::load(path.string());
    CHECK(cfg.records_path == "r.tsv");
    CHECK(cfg.radius_km == 2.0);
    CHECK(cfg.sigma_km == doctest::Approx(2.0 / 3));  // D/3 unless overridden
    CHECK(cfg.embed.alpha == 0.25);
    CHECK(cfg.variant == Variant::egel_all);
    CHECK(cfg.select_cutoffs == std::vector<double>{1.5, 2.5});
    CHECK(cfg.embed.dim == 10);  // untouched defaults survive

    // any key=value change moves the hash
    auto cfg2 = cfg;
    cfg2.kv["alpha"] = "0.26";
    CHECK(cfg.config_hash() != cfg2.config_hash());
    CHECK(cfg.artifact_header().find("hash=") != std::string::npos);

    const auto bad = dir / "bad.cfg";
    {
        std::ofstream f(bad);
        f << "no equals sign here\n";
    }
    CHECK_THROWS_AS(PipelineConfig::load(bad.string()), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::load((dir / "absent.cfg").string()),
                    MissingArtifactError);
}

TEST_CASE("pipeline: full egel-all run produces all artifacts and a sane report") {
    const auto dir = fresh_dir("pipe_smoke");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "egel-all"));
    const std::string out = (dir / "out").string();

    cmd_build(cfg, out);
    CHECK(fs::exists(out + "/assoc.tsv"));
    CHECK(fs::exists(out + "/counts.tsv"));
    cmd_select(cfg, out);
    CHECK(fs::exists(out + "/selection.tsv"));
    cmd_train(cfg, out);
    CHECK(fs::exists(out + "/vectors.txt"));
    CHECK(fs::exists(out + "/vectors.bin"));
    CHECK(fs::exists(out + "/objective.csv"));
    cmd_eval(cfg, out);
    CHECK(fs::exists(out + "/report.csv"));

    // the report has one row per category plus the family aggregate
    const auto report = read_text_file(out + "/report.csv");
    CHECK(report.find("category:cluster/k0") != std::string::npos);
    CHECK(report.find("category:cluster,") != std::string::npos);
    CHECK(report.find("egel-all") != std::string::npos);

    // vectors parse back and cover every location
    auto lv = load_vectors(out + "/vectors.txt", VectorFormat::text);
    CHECK(lv.ids.size() == 36);
    CHECK(lv.dim == 4);
}

TEST_CASE("pipeline: rerun from the same config is byte-identical") {
    // one corpus and one config, two independent runs into separate out dirs
    const auto dir = fresh_dir("pipe_det");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "egel-all"));
    const auto d1 = dir / "a";
    const auto d2 = dir / "b";
    for (const auto& out_dir : {d1, d2}) {
        const std::string out = (out_dir / "out").string();
        cmd_build(cfg, out);
        cmd_select(cfg, out);
        cmd_train(cfg, out);
        cmd_eval(cfg, out);
    }
    for (const auto* name :
         {"/assoc.tsv", "/counts.tsv", "/selection.tsv", "/vectors.txt", "/vectors.bin",
          "/objective.csv", "/report.csv"}) {
        // headers embed the config hash, which covers identical kv in both runs,
        // so whole files must match byte for byte
        CHECK(read_text_file((d1 / "out").string() + name) ==
              read_text_file((d2 / "out").string() + name));
    }
}

TEST_CASE("pipeline: artifacts from a different config are refused") {
    const auto dir = fresh_dir("pipe_hash");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "egel-tags-ns"));
    const std::string out = (dir / "out").string();
    cmd_build(cfg, out);

    auto changed = cfg;
    changed.kv["D"] = "2.0";
    changed.radius_km = 2.0;
    CHECK_THROWS_AS(cmd_train(changed, out), ValidationError);
    // the original config still works
    CHECK_NOTHROW(cmd_train(cfg, out));
}

TEST_CASE("pipeline: missing upstream artifacts raise MissingArtifactError") {
    const auto dir = fresh_dir("pipe_missing");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "egel-kl-tags-ns"));
    const std::string out = (dir / "out").string();
    CHECK_THROWS_AS(cmd_train(cfg, out), MissingArtifactError);  // no assoc.tsv yet
    cmd_build(cfg, out);
    CHECK_THROWS_AS(cmd_train(cfg, out), MissingArtifactError);  // no selection.tsv yet
    cmd_select(cfg, out);
    CHECK_NOTHROW(cmd_train(cfg, out));
}

TEST_CASE("pipeline: rebuilt association matrix matches the in-memory one") {
    const auto dir = fresh_dir("pipe_roundtrip");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "egel-tags"));
    const std::string out = (dir / "out").string();
    cmd_build(cfg, out);

    CorpusBundle b = load_corpus(cfg);
    auto direct = build_association_matrix(b.records, b.locs, cfg.radius_km, cfg.sigma_km);
    auto loaded = load_assoc_artifact(out, cfg, b.locs);
    REQUIRE(loaded.n_locations() == direct.n_locations());
    REQUIRE(loaded.n_tags() == direct.n_tags());
    for (std::size_t li = 0; li < direct.n_locations(); ++li) {
        REQUIRE(loaded.rows[li].size() == direct.rows[li].size());
        for (std::size_t k = 0; k < direct.rows[li].size(); ++k) {
            CHECK(loaded.tags[loaded.rows[li][k].tag] ==
                  direct.tags[direct.rows[li][k].tag]);
            CHECK(loaded.rows[li][k].w ==
                  doctest::Approx(direct.rows[li][k].w).epsilon(1e-12));
            CHECK(loaded.rows[li][k].ppmi ==
                  doctest::Approx(direct.rows[li][k].ppmi).epsilon(1e-12));
            CHECK(loaded.rows[li][k].count == direct.rows[li][k].count);
        }
    }
}

TEST_CASE("pipeline: bow variants evaluate without a training step") {
    const auto dir = fresh_dir("pipe_bow");
    auto cfg = PipelineConfig::load(write_smoke_config(dir, "bow-tags"));
    const std::string out = (dir / "out").string();
    cmd_build(cfg, out);
    cmd_eval(cfg, out);
    const auto report = read_text_file(out + "/report.csv");
    CHECK(report.find("bow-tags") != std::string::npos);
}

TEST_CASE("pipeline: eval refuses leaked targets structurally") {
    // egel-all without excluding the cluster taxonomy trains on the category
    // labels; evaluating on them must then fail
    const auto dir = fresh_dir("pipe_leak");
    SynthConfig sc;
    sc.n_locations = 30;
    sc.n_clusters = 3;
    sc.records_per_location = 10;
    sc.seed = 12;
    auto synth = generate_synthetic(sc, dir.string());
    const auto cfg_path = dir / "run.cfg";
    {
        std::ofstream f(cfg_path);
        f << "records=" << synth.records_path << "\nlocations=" << synth.locations_path
          << "\nfeatures=" << synth.features_path << "\ncategories=" << synth.categories_path
          << "\nvariant=egel-all\ndim=4\niterations=3\nseed=3\nselect_taxonomy=cluster\n"
          << "K=20\neval_tasks=category:cluster\n";
    }
    auto cfg = PipelineConfig::load(cfg_path.string());
    const std::string out = (dir / "out").string();
    cmd_build(cfg, out);
    cmd_select(cfg, out);
    cmd_train(cfg, out);
    CHECK_THROWS_AS(cmd_eval(cfg, out), ValidationError);
}

TEST_CASE("pipeline: sweep writes per-combination scores and one test row") {
    const auto dir = fresh_dir("pipe_sweep");
    auto cfg = PipelineConfig::load(write_smoke_config(
        dir, "egel-tags-ns", "sweep_dims=2,4\n"));
    const std::string out = (dir / "out").string();
    cmd_build(cfg, out);
    cmd_sweep(cfg, out);
    const auto sweep = read_text_file(out + "/sweep.csv");
    CHECK(sweep.find("dim,alpha,beta,tune_score,selected") != std::string::npos);
    // exactly one selected combination
    std::size_t selected = 0, pos = 0;
    while ((pos = sweep.find(",1\n", pos)) != std::string::npos) {
        ++selected;
        ++pos;
    }
    CHECK(selected == 1);
    CHECK(sweep.find(EvalReport::csv_header()) != std::string::npos);
}
