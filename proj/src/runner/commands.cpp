#include "gyronet/runner.hpp"
#include "gyronet/text.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gyronet::runner {

namespace {

using json = nlohmann::ordered_json;

std::ostream& out_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }

const std::string& require(const RunConfig& cfg, const std::string& key) {
    if (!cfg.is_set(key)) throw ConfigError("missing required setting '" + key + "'");
    return cfg.get(key);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    return f;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void log_config(const CommandContext& ctx, const std::string& command) {
    std::istringstream lines(ctx.config.dump());
    ctx.logger.info(command + ": resolved config");
    for (std::string line; std::getline(lines, line);) ctx.logger.info("  " + line);
}

std::vector<std::string> utterance_tokens(const std::string& utterance) {
    std::vector<std::string> out;
    for (char32_t cp : text::decode_utf8(utterance)) {
        if (!text::is_whitespace(cp)) out.push_back(text::encode_utf8(cp));
    }
    return out;
}

json evaluation_json(const hypformer::Evaluation& ev) {
    return {{"accuracy", ev.accuracy}, {"cross_entropy", ev.cross_entropy}, {"count", ev.count}};
}

}  // namespace

std::vector<hypformer::Example> encode_examples(const hypformer::Classifier& model, const IntentDataset& ds,
                                                const std::vector<std::size_t>& indices,
                                                const std::vector<std::string>& labels) {
    std::map<std::string, std::size_t> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) ids[labels[i]] = i;
    std::vector<hypformer::Example> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto& r = ds.records.at(i);
        const auto it = ids.find(r.label);
        if (it == ids.end()) throw DataError("label '" + r.label + "' is not known to the model");
        hypformer::Example ex;
        ex.label = it->second;
        for (const auto& tok : utterance_tokens(r.utterance)) ex.ids.push_back(model.token_id(tok));
        if (ex.ids.empty()) throw DataError("utterance " + std::to_string(i + 1) + " has no tokens");
        out.push_back(std::move(ex));
    }
    return out;
}

std::string metrics_json(const hypformer::Evaluation& heldout, const hypformer::Evaluation& train, int epochs,
                         const std::string& geometry, std::size_t dims, std::uint64_t seed,
                         const std::vector<hypformer::EpochStats>& history) {
    json doc;
    doc["accuracy"] = heldout.accuracy;
    doc["cross_entropy"] = heldout.cross_entropy;
    doc["heldout_count"] = heldout.count;
    doc["epochs"] = epochs;
    doc["geometry"] = geometry;
    doc["dims"] = dims;
    doc["seed"] = seed;
    doc["train"] = evaluation_json(train);
    json h = json::array();
    for (const auto& e : history) {
        h.push_back({{"epoch", e.epoch},
                     {"loss", e.loss},
                     {"accuracy", e.accuracy},
                     {"restarted", e.restarted},
                     {"lr_euclidean", e.lr_euclidean},
                     {"lr_riemannian", e.lr_riemannian}});
    }
    doc["history"] = std::move(h);
    return doc.dump(2) + "\n";
}

int cmd_train_embeddings(const CommandContext& ctx) {
    log_config(ctx, "train-embeddings");
    const auto& cfg = ctx.config;
    const std::string corpus = require(cfg, "corpus");
    const std::string out_path = require(cfg, "out");
    const auto sg = skipgram_config(cfg);
    const auto tokens = ingest_corpus(corpus, cfg.get_bool("keep_whitespace"));
    ctx.logger.info("corpus " + corpus + ": " + std::to_string(tokens.size()) + " tokens");

    auto log = open_out(out_path + ".log");
    const auto result = embed::train_skipgram(tokens, sg, [&](int epoch, double loss) {
        log << "epoch " << epoch << " loss " << fmt(loss) << '\n';
        ctx.logger.info("epoch " + std::to_string(epoch) + " loss " + fmt(loss));
    });
    embed::save_embeddings(out_path, embed::export_table(result));
    out_of(ctx) << "wrote " << result.vocab.size() << " " << embed::to_string(sg.geometry) << " embeddings (dim "
                << sg.dim << ") to " << out_path << '\n';
    return 0;
}

int cmd_train_classifier(const CommandContext& ctx) {
    log_config(ctx, "train-classifier");
    const auto& cfg = ctx.config;
    const std::string out_path = require(cfg, "out");
    auto table = embed::load_embeddings(require(cfg, "embeddings"));
    auto ds = load_intent_dataset(require(cfg, "dataset"), cfg.get_double("holdout"),
                                  static_cast<std::uint64_t>(cfg.get_int("seed")));
    if (cfg.is_set("dim") && cfg.get_size("dim") != table.dim) {
        throw ConfigError("dim " + cfg.get("dim") + " does not match the embedding dimension " +
                          std::to_string(table.dim));
    }
    const auto tc = transformer_config(cfg, table.dim, ds.labels.size());
    const bool hyperbolic = tc.geometry == hypformer::ModelGeometry::Hyperbolic;
    if (hyperbolic && table.geometry == embed::Geometry::Hyperboloid) {
        ctx.logger.info("converting hyperboloid embeddings to the Poincare ball");
        table = embed::convert_table(table, embed::Geometry::Poincare);
    }
    const auto wanted = hyperbolic ? embed::Geometry::Poincare : embed::Geometry::Euclidean;
    if (table.geometry != wanted) {
        throw ConfigError(std::string("geometry mismatch: ") + hypformer::to_string(tc.geometry) +
                          " model cannot use " + embed::to_string(table.geometry) + " embeddings");
    }

    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    auto model = hypformer::Classifier::initialize(tc, table.tokens, table.values, seed);
    optim::Optimizer optimizer(optim_config(cfg));
    hypformer::TrainOptions opts;
    opts.epochs = cfg.is_set("epochs") ? static_cast<int>(cfg.get_int("epochs")) : 100;
    opts.batch_size = cfg.get_size("batch_size");
    opts.seed = seed;
    if (opts.epochs < 1) throw ConfigError("epochs must be at least 1");

    const auto train = encode_examples(model, ds, ds.train_indices(), ds.labels);
    const auto heldout = encode_examples(model, ds, ds.holdout_indices(), ds.labels);
    ctx.logger.info("dataset: " + std::to_string(train.size()) + " train, " + std::to_string(heldout.size()) +
                    " held out, " + std::to_string(ds.labels.size()) + " labels");

    auto log = open_out(out_path + ".log");
    const auto history = hypformer::train_classifier(model, optimizer, train, opts, [&](const hypformer::EpochStats& e) {
        std::string line = "epoch " + std::to_string(e.epoch) + " loss " + fmt(e.loss) + " accuracy " + fmt(e.accuracy);
        if (e.restarted) line += " restart";
        log << line << '\n';
        ctx.logger.info(line);
    });
    const auto train_eval = hypformer::evaluate(model, train);
    const auto heldout_eval = hypformer::evaluate(model, heldout);

    hypformer::save_bundle(out_path, {model, ds.labels, optimizer.state()});
    const auto metrics = metrics_json(heldout_eval, train_eval, opts.epochs, hypformer::to_string(tc.geometry),
                                      table.dim, seed, history);
    open_out(out_path + ".metrics.json") << metrics;
    out_of(ctx) << metrics;
    return 0;
}

int cmd_evaluate(const CommandContext& ctx) {
    log_config(ctx, "evaluate");
    const auto& cfg = ctx.config;
    const auto bundle = hypformer::load_bundle(require(cfg, "model"));
    const auto ds = load_intent_dataset(require(cfg, "dataset"), cfg.get_double("holdout"),
                                        static_cast<std::uint64_t>(cfg.get_int("seed")));
    const std::string split = cfg.get("split");
    std::vector<std::size_t> rows;
    if (split == "holdout") {
        rows = ds.holdout_indices();
    } else if (split == "train") {
        rows = ds.train_indices();
    } else if (split == "all") {
        rows.resize(ds.records.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        throw ConfigError("split: expected holdout, train or all, got '" + split + "'");
    }
    const auto examples = encode_examples(bundle.model, ds, rows, bundle.labels);
    const auto ev = hypformer::evaluate(bundle.model, examples);
    json doc = evaluation_json(ev);
    doc["split"] = split;
    doc["geometry"] = hypformer::to_string(bundle.model.config().geometry);
    doc["dims"] = bundle.model.config().model_dim;
    const std::string text = doc.dump(2) + "\n";
    if (cfg.is_set("out")) open_out(cfg.get("out")) << text;
    out_of(ctx) << text;
    return 0;
}

int cmd_convert(const CommandContext& ctx) {
    log_config(ctx, "convert");
    const auto& cfg = ctx.config;
    const std::string input = require(cfg, "input");
    const std::string out_path = require(cfg, "out");
    const auto target = embed::parse_geometry(require(cfg, "geometry"));
    const auto table = embed::load_embeddings(input);
    const auto converted = embed::convert_table(table, target);
    embed::save_embeddings(out_path, converted);
    out_of(ctx) << "converted " << converted.tokens.size() << " rows from " << embed::to_string(table.geometry)
                << " to " << embed::to_string(target) << '\n';
    return 0;
}

int cmd_gen_data(const CommandContext& ctx) {
    log_config(ctx, "gen-data");
    const auto& cfg = ctx.config;
    const std::string kind = cfg.get("kind");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    std::ostringstream body;
    if (kind == "intents") {
        SyntheticIntentOptions o;
        o.classes = cfg.get_size("classes");
        o.per_class = cfg.get_size("per_class");
        o.vocab_size = cfg.get_size("vocab_size");
        o.seed = seed;
        o.composite_fraction = cfg.get_double("composite_fraction");
        o.noise_min = cfg.get_size("noise_min");
        o.noise_max = cfg.get_size("noise_max");
        auto ds = generate_synthetic_intents(o);
        const std::size_t rows = cfg.get_size("rows");
        if (rows > 0 && rows < ds.records.size()) ds.records.resize(rows);
        write_intent_tsv(body, ds);
    } else if (kind == "corpus") {
        body << generate_toy_corpus(cfg.get_size("chars"), seed);
    } else {
        throw ConfigError("kind: expected intents or corpus, got '" + kind + "'");
    }
    if (cfg.is_set("out")) {
        open_out(cfg.get("out")) << body.str();
        ctx.logger.info("wrote " + cfg.get("out"));
    } else {
        out_of(ctx) << body.str();
    }
    return 0;
}

int cmd_geometry_check(const CommandContext& ctx, const SuiteOptions& options) {
    auto& out = out_of(ctx);
    bool ok = true;
    for (const auto& r : run_geometry_suites(options)) {
        char line[160];
        std::snprintf(line, sizeof line, "%-4s %-22s max_error %.3e  tol %.0e", r.passed ? "PASS" : "FAIL",
                      r.name.c_str(), r.max_error, r.tolerance);
        out << line;
        if (!r.detail.empty()) out << "  (" << r.detail << ")";
        out << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace gyronet::runner
