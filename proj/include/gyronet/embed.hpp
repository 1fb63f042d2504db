#pragma once

// Skip-gram with negative sampling, Euclidean or on the hyperboloid.

#include "gyronet/geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gyronet::embed {

enum class Geometry : std::uint8_t { Euclidean, Hyperboloid, Poincare };

const char* to_string(Geometry g);
Geometry parse_geometry(const std::string& s);

class EmbedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public EmbedError {
public:
    DivergenceError(int epoch, std::uint64_t step);
    int epoch() const noexcept { return epoch_; }
    std::uint64_t step() const noexcept { return step_; }

private:
    int epoch_;
    std::uint64_t step_;
};

struct Vocabulary {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> tokens;
    std::vector<std::uint64_t> counts;
    /// counts^α, normalized.
    std::vector<double> sampling;

    std::size_t size() const noexcept { return tokens.size(); }
    std::optional<std::size_t> id(const std::string& token) const;
};

/// Ids are assigned by descending count, ties broken by token bytes.
Vocabulary build_vocab(const std::vector<std::string>& tokens, std::uint64_t min_count = 1, double alpha = 0.75);

/// Maps tokens to ids, skipping tokens outside the vocabulary.
std::vector<std::size_t> encode(const Vocabulary& vocab, const std::vector<std::string>& tokens);

struct TrainingPair {
    std::size_t center = 0;
    std::size_t context = 0;
    std::vector<std::size_t> negatives;
};

class NegativeSampler {
public:
    explicit NegativeSampler(const Vocabulary& vocab);
    /// Draws a noise token, redrawing up to 10 times while it equals `avoid`.
    std::size_t draw(std::mt19937_64& rng, std::size_t avoid);

private:
    std::discrete_distribution<std::size_t> dist_;
};

using PairFn = std::function<void(const TrainingPair&)>;

/// Every (k, k+j) with 0 < |j| ≤ window inside the sequence, in position order.
void for_each_pair(std::span<const std::size_t> ids, int window, int negatives, NegativeSampler& sampler,
                   std::mt19937_64& rng, const PairFn& fn);
std::vector<TrainingPair> generate_pairs(std::span<const std::size_t> ids, int window, int negatives,
                                         NegativeSampler& sampler, std::mt19937_64& rng);

struct EmbeddingMatrices {
    Geometry geometry = Geometry::Hyperboloid;
    std::size_t dim = 0;   ///< intrinsic dimension
    std::size_t rows = 0;
    std::vector<double> a;  ///< center representations
    std::vector<double> b;  ///< context representations

    /// Stored coordinates per row: dim, or dim + 1 on the hyperboloid.
    std::size_t width() const noexcept { return geometry == Geometry::Hyperboloid ? dim + 1 : dim; }
    std::span<double> row_a(std::size_t i) { return {a.data() + i * width(), width()}; }
    std::span<double> row_b(std::size_t i) { return {b.data() + i * width(), width()}; }
    std::span<const double> row_a(std::size_t i) const { return {a.data() + i * width(), width()}; }
    std::span<const double> row_b(std::size_t i) const { return {b.data() + i * width(), width()}; }
};

double hyperboloid_logit(const geometry::HyperboloidPoint& a, const geometry::HyperboloidPoint& b, double theta);

/// Σ_i log σ(±logit_i): + for the context token, − for each negative.
double pair_log_likelihood(const TrainingPair& pair, const EmbeddingMatrices& e, double theta);

struct PairGradients {
    geometry::Vec center;
    /// One entry per distinct sampled id (context first), summed over repeats.
    std::vector<std::pair<std::size_t, geometry::Vec>> context;
};

/// Gradients of the pair log-likelihood under the Minkowski metric:
/// Σ (y_i − σ_i)·B_{w_i} for the center row and N·(y − σ)·A_c per context row.
PairGradients minkowski_gradients(const TrainingPair& pair, const EmbeddingMatrices& e, double theta);

/// exp_x(−η·proj_x(g)) for the Minkowski gradient g of a loss.
geometry::HyperboloidPoint rsgd_step_hyperboloid(const geometry::HyperboloidPoint& param,
                                                 geometry::ConstSpan ambient_grad, double eta);

struct SkipGramConfig {
    Geometry geometry = Geometry::Hyperboloid;
    std::size_t dim = 10;
    int window = 5;
    int negatives = 5;
    double theta = 1.0;
    double lr = 0.05;
    int epochs = 5;
    std::uint64_t seed = 1;
    std::uint64_t min_count = 1;
    double alpha = 0.75;
    double init_sigma = 0.01;
    bool subsample = false;
    double subsample_threshold = 1e-3;
};

struct SkipGramResult {
    Vocabulary vocab;
    EmbeddingMatrices embeddings;
    std::vector<double> epoch_losses;  ///< mean negative log-likelihood per pair
};

using EpochFn = std::function<void(int epoch, double mean_loss)>;

SkipGramResult train_skipgram(const std::vector<std::string>& tokens, const SkipGramConfig& config,
                              const EpochFn& on_epoch = {});

// ---------------------------------------------------------------------------
// Embedding text files: "<rows> <dim> <geometry>" then "token v1 v2 ...".

struct EmbeddingTable {
    Geometry geometry = Geometry::Euclidean;
    std::size_t dim = 0;
    std::vector<std::string> tokens;
    std::vector<double> values;

    std::size_t width() const noexcept { return geometry == Geometry::Hyperboloid ? dim + 1 : dim; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * width(), width()}; }
};

/// Center rows (A) of a trained model.
EmbeddingTable export_table(const SkipGramResult& result);

void write_embeddings(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& in);
void save_embeddings(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::string& path);

/// Row-wise model change between hyperboloid and Poincaré ball.
EmbeddingTable convert_table(const EmbeddingTable& table, Geometry target);

}  // namespace gyronet::embed
