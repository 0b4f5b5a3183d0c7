#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geoembed/pipeline.hpp"
#include "geoembed/util.hpp"

int main(int argc, char** argv) {
    CLI::App app{"geoembed: location embeddings from geotagged tags and structured features"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    long seed = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file")->required();
        cmd->add_option("--out", out_dir, "artifact directory");
        cmd->add_option("--seed", seed, "override the config seed");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    auto* build = app.add_subcommand("build", "build the association matrix");
    auto* select = app.add_subcommand("select", "KL tag selection");
    auto* train = app.add_subcommand("train", "train location embeddings");
    auto* eval = app.add_subcommand("eval", "run the evaluation tasks");
    auto* sweep = app.add_subcommand("sweep", "grid sweep, tune-split selection");
    for (auto* cmd : {synth, build, select, train, eval, sweep}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        geoembed::PipelineConfig cfg = geoembed::PipelineConfig::load(config_path);
        if (seed >= 0) {
            cfg.embed.seed = static_cast<std::uint64_t>(seed);
            cfg.kv["seed"] = std::to_string(seed);
        }
        if (synth->parsed()) geoembed::cmd_synth(cfg, out_dir);
        if (build->parsed()) geoembed::cmd_build(cfg, out_dir);
        if (select->parsed()) geoembed::cmd_select(cfg, out_dir);
        if (train->parsed()) geoembed::cmd_train(cfg, out_dir);
        if (eval->parsed()) geoembed::cmd_eval(cfg, out_dir);
        if (sweep->parsed()) geoembed::cmd_sweep(cfg, out_dir);
    } catch (const geoembed::MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const geoembed::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
