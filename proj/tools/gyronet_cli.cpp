#include "gyronet/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

using namespace gyronet::runner;

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

const Flag kCommon[] = {
    {"--seed", "seed", "random seed"},
    {"--geometry", "geometry", "euclidean, hyperboloid or poincare"},
    {"--dim", "dim", "embedding / model dimension"},
    {"--epochs", "epochs", "training epochs"},
    {"--restart-epoch", "restart_epoch", "epoch at which the learning-rate schedule restarts"},
    {"--holdout", "holdout", "held-out fraction of the dataset (default 0.15)"},
    {"--out", "out", "output path"},
};

const std::map<std::string, std::vector<Flag>> kSpecific = {
    {"train-embeddings", {{"--corpus", "corpus", "UTF-8 text corpus"}}},
    {"train-classifier",
     {{"--embeddings", "embeddings", "embedding file"}, {"--dataset", "dataset", "TSV dataset (utterance<TAB>label)"}}},
    {"evaluate",
     {{"--model", "model", "model bundle"},
      {"--dataset", "dataset", "TSV dataset"},
      {"--split", "split", "holdout, train or all"}}},
    {"convert", {{"--input", "input", "embedding file to convert"}}},
    {"gen-data", {{"--kind", "kind", "intents or corpus"}, {"--rows", "rows", "keep only the first N rows"}}},
    {"geometry-check", {}},
};

struct Invocation {
    std::string config_path;
    std::string preset;
    std::vector<std::string> assignments;
    std::map<std::string, std::string> flags;  // key -> value
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperbolic embeddings and intent classification toolkit"};
    app.require_subcommand(1);
    Invocation inv;
    std::map<std::string, CLI::App*> subs;

    for (const auto& [name, specific] : kSpecific) {
        CLI::App* sub = app.add_subcommand(name);
        subs[name] = sub;
        if (name == "geometry-check") continue;
        sub->add_option("--config", inv.config_path, "key=value configuration file");
        sub->add_option("--preset", inv.preset, "named preset applied before the config file");
        sub->add_option("--set", inv.assignments, "override a setting, key=value (repeatable)");
        auto add = [&](const Flag& f) {
            sub->add_option_function<std::string>(
                f.name, [&inv, key = std::string(f.key)](const std::string& v) { inv.flags[key] = v; }, f.help);
        };
        for (const auto& f : kCommon) add(f);
        for (const auto& f : specific) add(f);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CommandContext ctx{RunConfig(), Logger::from_env(), &std::cout};
        if (!inv.preset.empty()) ctx.config.apply_preset(inv.preset);
        if (!inv.config_path.empty()) ctx.config.merge_file(inv.config_path);
        for (const auto& [key, value] : inv.flags) ctx.config.set(key, value);
        for (const auto& a : inv.assignments) ctx.config.set_assignment(a);

        if (subs["train-embeddings"]->parsed()) return cmd_train_embeddings(ctx);
        if (subs["train-classifier"]->parsed()) return cmd_train_classifier(ctx);
        if (subs["evaluate"]->parsed()) return cmd_evaluate(ctx);
        if (subs["convert"]->parsed()) return cmd_convert(ctx);
        if (subs["gen-data"]->parsed()) return cmd_gen_data(ctx);
        return cmd_geometry_check(ctx);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
