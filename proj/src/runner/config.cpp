#include "gyronet/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gyronet::runner {

namespace {

const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d{
        // shared
        {"seed", "1"},
        {"geometry", ""},
        {"dim", ""},
        {"epochs", ""},
        {"restart_epoch", "-1"},
        {"holdout", "0.15"},
        {"out", ""},
        {"corpus", ""},
        {"dataset", ""},
        {"embeddings", ""},
        {"model", ""},
        {"input", ""},
        {"split", "holdout"},
        // skip-gram
        {"window", "5"},
        {"negatives", "5"},
        {"theta", "1"},
        {"lr", "0.05"},
        {"min_count", "1"},
        {"alpha", "0.75"},
        {"init_sigma", "0.01"},
        {"subsample", "false"},
        {"subsample_threshold", "0.001"},
        {"keep_whitespace", "false"},
        // classifier
        {"layers", "2"},
        {"heads", "4"},
        {"head_dim", "0"},
        {"ffn_dim", "0"},
        {"dropout", "0"},
        {"max_seq_len", "64"},
        {"batch_size", "32"},
        {"lr_euclidean", "0.001"},
        {"lr_riemannian", "0.05"},
        {"rho", "0.9"},
        {"schedule", "exponential"},
        {"decay", "0.97"},
        {"residual", "false"},
        {"fine_tune_embeddings", "false"},
        // gen-data
        {"kind", "intents"},
        {"classes", "8"},
        {"per_class", "50"},
        {"vocab_size", "64"},
        {"composite_fraction", "0.25"},
        {"noise_min", "2"},
        {"noise_max", "6"},
        {"chars", "20000"},
        {"rows", "0"},
    };
    return d;
}

const std::map<std::string, std::map<std::string, std::string>>& presets() {
    static const std::map<std::string, std::map<std::string, std::string>> p{
        {"eucl-c2v-128",
         {{"geometry", "euclidean"}, {"dim", "128"}, {"layers", "3"}, {"heads", "16"}, {"dropout", "0.2"},
          {"lr_euclidean", "0.0001"}}},
        {"eucl-c2v-256",
         {{"geometry", "euclidean"}, {"dim", "256"}, {"layers", "3"}, {"heads", "16"}, {"dropout", "0.2"},
          {"lr_euclidean", "0.0001"}}},
        {"hyp-c2v-100-nodrop",
         {{"geometry", "poincare"}, {"dim", "100"}, {"layers", "3"}, {"heads", "16"}, {"head_dim", "6"},
          {"dropout", "0"}, {"lr_euclidean", "0.001"}, {"lr_riemannian", "0.05"}}},
        {"hyp-c2v-100-drop30",
         {{"geometry", "poincare"}, {"dim", "100"}, {"layers", "3"}, {"heads", "16"}, {"head_dim", "6"},
          {"dropout", "0.3"}, {"lr_euclidean", "0.001"}, {"lr_riemannian", "0.05"}}},
        {"desk-hyperbolic",
         {{"geometry", "poincare"}, {"dim", "16"}, {"layers", "2"}, {"heads", "4"}, {"epochs", "100"},
          {"restart_epoch", "50"}, {"lr_euclidean", "0.003"}, {"lr_riemannian", "0.05"}}},
        {"desk-euclidean",
         {{"geometry", "euclidean"}, {"dim", "16"}, {"layers", "2"}, {"heads", "4"}, {"epochs", "100"},
          {"restart_epoch", "50"}, {"lr_euclidean", "0.003"}}},
    };
    return p;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

LogLevel parse_log_level(const std::string& s) {
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    throw ConfigError("unknown log level '" + s + "' (expected error, info or debug)");
}

Logger::Logger(LogLevel level, std::ostream* sink) : level_(level), sink_(sink ? sink : &std::cerr) {}

Logger Logger::from_env(std::ostream* sink) {
    const char* env = std::getenv("GYRONET_LOG");
    return Logger(env && *env ? parse_log_level(env) : LogLevel::Info, sink);
}

void Logger::write(LogLevel level, const std::string& msg) const {
    if (static_cast<int>(level) > static_cast<int>(level_)) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t secs = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    static const char* names[] = {"error", "info", "debug"};
    *sink_ << stamp << ' ' << names[static_cast<int>(level)] << ' ' << msg << '\n';
}

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, v] : presets()) n.push_back(k);
        return n;
    }();
    return names;
}

void RunConfig::apply_preset(const std::string& name) {
    const auto it = presets().find(name);
    if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
    for (const auto& [k, v] : it->second) set(k, v);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown setting '" + key + "'");
    it->second = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::merge_text(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("expected key=value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "preset") {
                apply_preset(value);
            } else {
                set(key, value);
            }
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    merge_text(in, path);
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown setting '" + key + "'");
    return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t used = 0;
    long long n = 0;
    try {
        n = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return n;
}

std::size_t RunConfig::get_size(const std::string& key) const {
    const auto n = get_int(key);
    if (n < 0) throw ConfigError(key + ": must not be negative");
    return static_cast<std::size_t>(n);
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return d;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string RunConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

embed::SkipGramConfig skipgram_config(const RunConfig& cfg) {
    embed::SkipGramConfig s;
    s.geometry = cfg.is_set("geometry") ? embed::parse_geometry(cfg.get("geometry")) : embed::Geometry::Hyperboloid;
    s.dim = cfg.is_set("dim") ? cfg.get_size("dim") : 10;
    s.window = static_cast<int>(cfg.get_int("window"));
    s.negatives = static_cast<int>(cfg.get_int("negatives"));
    s.theta = cfg.get_double("theta");
    s.lr = cfg.get_double("lr");
    s.epochs = cfg.is_set("epochs") ? static_cast<int>(cfg.get_int("epochs")) : 5;
    s.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    s.min_count = cfg.get_size("min_count");
    s.alpha = cfg.get_double("alpha");
    s.init_sigma = cfg.get_double("init_sigma");
    s.subsample = cfg.get_bool("subsample");
    s.subsample_threshold = cfg.get_double("subsample_threshold");
    if (s.window < 1) throw ConfigError("window must be at least 1");
    if (s.negatives < 0) throw ConfigError("negatives must not be negative");
    if (s.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (s.dim < 1) throw ConfigError("dim must be at least 1");
    if (!(s.lr > 0.0)) throw ConfigError("lr must be positive");
    return s;
}

hypformer::TransformerConfig transformer_config(const RunConfig& cfg, std::size_t dim, std::size_t classes) {
    hypformer::TransformerConfig t;
    const std::string g = cfg.is_set("geometry") ? cfg.get("geometry") : "poincare";
    if (g == "euclidean") {
        t.geometry = hypformer::ModelGeometry::Euclidean;
    } else if (g == "poincare" || g == "hyperboloid" || g == "hyperbolic") {
        t.geometry = hypformer::ModelGeometry::Hyperbolic;
    } else {
        throw ConfigError("geometry: unknown value '" + g + "'");
    }
    t.layers = cfg.get_size("layers");
    t.heads = cfg.get_size("heads");
    t.model_dim = dim;
    t.head_dim = cfg.get_size("head_dim");
    t.ffn_dim = cfg.get_size("ffn_dim");
    t.dropout = cfg.get_double("dropout");
    t.max_seq_len = cfg.get_size("max_seq_len");
    t.num_classes = classes;
    t.residual = cfg.get_bool("residual");
    t.fine_tune_embeddings = cfg.get_bool("fine_tune_embeddings");
    try {
        t.validate();
    } catch (const hypformer::ModelError& e) {
        throw ConfigError(e.what());
    }
    return t;
}

optim::OptimConfig optim_config(const RunConfig& cfg) {
    optim::OptimConfig o;
    o.lr_euclidean = cfg.get_double("lr_euclidean");
    o.lr_riemannian = cfg.get_double("lr_riemannian");
    o.rho = cfg.get_double("rho");
    try {
        o.schedule = optim::parse_schedule(cfg.get("schedule"));
    } catch (const optim::OptimError& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    o.decay = cfg.get_double("decay");
    o.total_epochs = cfg.is_set("epochs") ? static_cast<int>(cfg.get_int("epochs")) : 100;
    o.restart_epoch = static_cast<int>(cfg.get_int("restart_epoch"));
    if (!(o.lr_euclidean > 0.0) || !(o.lr_riemannian > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(o.rho >= 0.0 && o.rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    return o;
}

}  // namespace gyronet::runner
