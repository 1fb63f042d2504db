#pragma once

// Data plumbing, configuration, logging and the batch commands behind the CLI.

#include "gyronet/embed.hpp"
#include "gyronet/geometry.hpp"
#include "gyronet/hypformer.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gyronet::runner {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logging. Level comes from GYRONET_LOG (error, info, debug); default info.

enum class LogLevel : std::uint8_t { Error, Info, Debug };

class Logger {
public:
    explicit Logger(LogLevel level = LogLevel::Info, std::ostream* sink = nullptr);
    static Logger from_env(std::ostream* sink = nullptr);

    LogLevel level() const noexcept { return level_; }
    void error(const std::string& msg) const { write(LogLevel::Error, msg); }
    void info(const std::string& msg) const { write(LogLevel::Info, msg); }
    void debug(const std::string& msg) const { write(LogLevel::Debug, msg); }
    void write(LogLevel level, const std::string& msg) const;

private:
    LogLevel level_;
    std::ostream* sink_;
};

LogLevel parse_log_level(const std::string& s);

// ---------------------------------------------------------------------------
// Corpora and datasets.

/// Character tokens of a UTF-8 file, streamed in fixed-size chunks.
std::vector<std::string> ingest_corpus(const std::string& path, bool keep_whitespace = false);

struct IntentRecord {
    std::string utterance;
    std::string label;
};

struct IntentDataset {
    std::vector<IntentRecord> records;
    std::vector<std::string> labels;  ///< sorted; position is the label id
    std::map<std::string, std::size_t> label_ids;
    std::vector<bool> holdout;  ///< per record

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> holdout_indices() const;
};

/// Rebuilds `labels` / `label_ids` from the records.
void index_labels(IntentDataset& ds);

/// Stratified split: per-label holdout counts by largest remainder so the
/// total is round(N · fraction); members chosen by a seeded shuffle.
void split_dataset(IntentDataset& ds, double holdout_fraction, std::uint64_t seed);

/// "utterance<TAB>label" per line. `source` names the input in errors.
IntentDataset read_intent_tsv(std::istream& in, const std::string& source = "<stream>");
void write_intent_tsv(std::ostream& out, const IntentDataset& ds);
IntentDataset load_intent_dataset(const std::string& path, double holdout_fraction = 0.15, std::uint64_t seed = 1);

struct SyntheticIntentOptions {
    std::size_t classes = 8;
    std::size_t per_class = 50;
    std::size_t vocab_size = 64;
    std::uint64_t seed = 1;
    double composite_fraction = 0.25;
    std::size_t noise_min = 2;
    std::size_t noise_max = 6;
};

/// Classes own 2-4 disjoint signature characters; composite classes "a+b"
/// mix the signatures of two base classes. Rows are emitted round-robin over
/// classes, all marked as training rows.
IntentDataset generate_synthetic_intents(const SyntheticIntentOptions& options);

/// Text from a small generated lexicon of multi-character words, with
/// sentence punctuation; `chars` counts non-whitespace characters.
std::string generate_toy_corpus(std::size_t chars, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Configuration.

/// Flat key=value settings with defaults for every known key. Unknown keys
/// are rejected on every path in.
class RunConfig {
public:
    RunConfig();

    static const std::vector<std::string>& preset_names();
    /// Applies a named preset on top of the current values.
    void apply_preset(const std::string& name);
    /// Parses "key=value" lines; '#' starts a comment.
    void merge_text(std::istream& in, const std::string& source);
    void merge_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    /// "key=value".
    void set_assignment(const std::string& assignment);

    const std::string& get(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    bool is_set(const std::string& key) const { return !get(key).empty(); }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    /// All settings, one "key=value" per line, sorted by key.
    std::string dump() const;

private:
    std::map<std::string, std::string> values_;
};

embed::SkipGramConfig skipgram_config(const RunConfig& cfg);
hypformer::TransformerConfig transformer_config(const RunConfig& cfg, std::size_t dim, std::size_t classes);
optim::OptimConfig optim_config(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Geometry checks.

/// Ball → Minkowski coordinates. Replaceable so a fault can be injected into
/// the isometry suite; the suite never assumes the result is on the sheet.
using ToHyperboloidFn = std::function<geometry::Vec(const geometry::PoincarePoint&)>;

struct SuiteOptions {
    std::size_t triples = 10000;     ///< gyrovector axioms
    std::size_t pairs = 1000;        ///< round trips, isometry
    std::size_t configurations = 50; ///< skip-gram gradient oracle
    std::uint64_t seed = 2024;
    ToHyperboloidFn to_hyperboloid;  ///< defaults to geometry::to_hyperboloid
};

struct SuiteResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

std::vector<SuiteResult> run_geometry_suites(const SuiteOptions& options = {});

/// The conversion with an unsquared denominator, (2y, 1 + ‖y‖²)/(1 − ‖y‖).
geometry::Vec to_hyperboloid_unsquared(const geometry::PoincarePoint& y);

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code and writes human-readable
// output to `out`; diagnostics go through the logger.

struct CommandContext {
    RunConfig config;
    Logger logger;
    std::ostream* out = nullptr;
};

int cmd_train_embeddings(const CommandContext& ctx);
int cmd_train_classifier(const CommandContext& ctx);
int cmd_evaluate(const CommandContext& ctx);
int cmd_convert(const CommandContext& ctx);
int cmd_gen_data(const CommandContext& ctx);
int cmd_geometry_check(const CommandContext& ctx, const SuiteOptions& options = {});

/// Metrics document with at least {accuracy, cross_entropy, epochs, geometry, dims, seed}.
std::string metrics_json(const hypformer::Evaluation& heldout, const hypformer::Evaluation& train, int epochs,
                         const std::string& geometry, std::size_t dims, std::uint64_t seed,
                         const std::vector<hypformer::EpochStats>& history);

/// Maps utterances to token-id sequences for a model's vocabulary.
std::vector<hypformer::Example> encode_examples(const hypformer::Classifier& model, const IntentDataset& ds,
                                                const std::vector<std::size_t>& indices,
                                                const std::vector<std::string>& labels);

}  // namespace gyronet::runner
