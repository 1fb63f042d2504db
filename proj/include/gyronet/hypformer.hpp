#pragma once

// Transformer intent classifier, Euclidean or on the Poincaré ball.
//
// A batch holds B sequences padded to a common length L; every layer works on
// the [B·L x n] stack of positions. Attention uses a block-diagonal additive
// mask so sequences never see each other or their padding.

#include "gyronet/diff/gradcheck.hpp"
#include "gyronet/diff/tape.hpp"
#include "gyronet/geometry.hpp"
#include "gyronet/optim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace gyronet::hypformer {

using diff::Tape;
using diff::Tensor;
using diff::Var;

enum class ModelGeometry : std::uint8_t { Euclidean, Hyperbolic };

const char* to_string(ModelGeometry g);
ModelGeometry parse_model_geometry(const std::string& s);

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TransformerConfig {
    ModelGeometry geometry = ModelGeometry::Hyperbolic;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t model_dim = 16;
    std::size_t head_dim = 0;  ///< 0 means model_dim / heads
    std::size_t ffn_dim = 0;   ///< 0 means 2 * model_dim
    double dropout = 0.0;
    std::size_t max_seq_len = 64;
    std::size_t num_classes = 2;
    bool residual = false;           ///< x ⊕ sublayer(x) around attention and FFN
    bool fine_tune_embeddings = false;

    std::size_t resolved_head_dim() const { return head_dim ? head_dim : model_dim / heads; }
    std::size_t resolved_ffn_dim() const { return ffn_dim ? ffn_dim : 2 * model_dim; }
    /// Throws ModelError on an inconsistent configuration.
    void validate() const;

    std::map<std::string, std::string> to_map() const;
    static TransformerConfig from_map(const std::map<std::string, std::string>& kv);
};

/// sin/cos encoding: PE[2i] = sin(pos/10000^(2i/d)), PE[2i+1] = cos(same angle).
std::vector<double> positional_encoding(std::size_t pos, std::size_t d);

// ---------------------------------------------------------------------------
// Layers. All operate row-wise on [rows x n] stacks.

/// Additive mask [B·L x B·L]: 0 where query and key share a sequence and the
/// key is inside its length, -1e9 elsewhere.
Tensor attention_mask(const std::vector<std::size_t>& lengths, std::size_t seq_len);

/// x ⊕ exp0(pe) on the ball, x + pe in Euclidean space.
Var attach_positions(Var x, Var pe, ModelGeometry g);

/// softmax(q kᵀ / √d_k + mask) v.
Var scaled_dot_attention(Var q, Var k, Var v, Var mask);

/// exp0(attention(log0 q, log0 k, log0 v)).
Var hyperbolic_attention(Var q, Var k, Var v, Var mask);

/// Projects with `w` [(heads·h) x n] (Möbius matvec on the ball) and slices
/// the result into `heads` column blocks, each clamped into its own ball.
std::vector<Var> split_heads(Var w, Var x, std::size_t heads, ModelGeometry g);

/// (M_0 ⊗ head_0) ⊕ (M_1 ⊗ head_1) ⊕ ..., left-associated in head order.
/// `m` holds one [n x h] matrix per head. Euclidean mode sums the products.
Var merge_heads(const std::vector<Var>& heads, const std::vector<Var>& m, ModelGeometry g);

/// M2 ⊗ relu⊗(M1 ⊗ x ⊕ b1) ⊕ b2 (or its Euclidean counterpart). Biases are 1-row.
Var feed_forward(Var x, Var m1, Var b1, Var m2, Var b2, ModelGeometry g);

/// Coordinate-wise max over each sequence's unmasked positions; on the ball
/// the max is taken over log0 and mapped back with exp0. Returns [B x n].
Var pool(Var x, const std::vector<std::size_t>& lengths, std::size_t seq_len, ModelGeometry g);

/// Class scores from offsets `p` [K x n] and normals `a` [K x n]; rejects a zero normal.
Var hyperbolic_mlr(Var x, Var p, Var a);

/// Inverted dropout; on the ball it acts on log0(x). Identity when not training.
Var tangent_dropout(Var x, double rate, std::mt19937_64& rng, bool training, ModelGeometry g);

// ---------------------------------------------------------------------------
// Model.

struct SequenceBatch {
    std::size_t seq_len = 0;
    std::vector<std::size_t> ids;      ///< B·L token ids, padding positions hold 0
    std::vector<std::size_t> lengths;  ///< per sequence, 1 ≤ length ≤ seq_len
    std::vector<std::size_t> labels;   ///< empty when unlabelled

    std::size_t size() const noexcept { return lengths.size(); }
};

struct Example {
    std::vector<std::size_t> ids;
    std::size_t label = 0;
};

/// Pads to the longest sequence (capped at max_len) and truncates longer ones.
SequenceBatch make_batch(const std::vector<Example>& examples, std::size_t max_len);

class Classifier {
public:
    Classifier() = default;
    Classifier(TransformerConfig config, std::vector<std::string> vocab, std::vector<optim::Parameter> params);

    /// Fresh parameters; `embeddings` holds one row per vocab token (ball
    /// points in hyperbolic mode). Token id vocab.size() is the UNK slot.
    static Classifier initialize(const TransformerConfig& config, std::vector<std::string> vocab,
                                 std::vector<double> embeddings, std::uint64_t seed);

    const TransformerConfig& config() const noexcept { return config_; }
    const std::vector<std::string>& vocab() const noexcept { return vocab_; }
    std::size_t unk_id() const noexcept { return vocab_.size(); }
    std::size_t token_id(const std::string& token) const;

    std::vector<optim::Parameter>& params() noexcept { return params_; }
    const std::vector<optim::Parameter>& params() const noexcept { return params_; }
    const optim::Parameter& param(const std::string& name) const;
    optim::Parameter& param(const std::string& name);

private:
    TransformerConfig config_;
    std::vector<std::string> vocab_;
    std::map<std::string, std::size_t> token_index_;
    std::vector<optim::Parameter> params_;
};

struct ForwardOptions {
    bool training = false;
    std::mt19937_64* rng = nullptr;  ///< required when training with dropout
};

/// Records the forward pass; every parameter is a named tape input.
/// Returns logits [B x K].
Var classifier_logits(Tape& tape, const Classifier& model, const SequenceBatch& batch,
                      const ForwardOptions& options = {});

/// Row-stochastic class probabilities [B x K].
Tensor classifier_forward(const Classifier& model, const SequenceBatch& batch);

// ---------------------------------------------------------------------------
// Training.

struct TrainOptions {
    int epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

struct EpochStats {
    int epoch = 0;  ///< 1-based
    double loss = 0.0;
    double accuracy = 0.0;
    bool restarted = false;
    double lr_euclidean = 0.0;
    double lr_riemannian = 0.0;
};

struct Evaluation {
    double accuracy = 0.0;
    double cross_entropy = 0.0;
    std::size_t count = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch training with a seeded shuffle each epoch.
std::vector<EpochStats> train_classifier(Classifier& model, optim::Optimizer& optimizer,
                                         const std::vector<Example>& train, const TrainOptions& options,
                                         const EpochCallback& on_epoch = {});

Evaluation evaluate(const Classifier& model, const std::vector<Example>& examples, std::size_t batch_size = 64);

/// Backward of the batch cross-entropy against central differences of the
/// replayed graph, one report per trainable parameter.
std::map<std::string, diff::GradCheckReport> check_classifier_gradients(const Classifier& model,
                                                                        const SequenceBatch& batch, double h = 1e-5,
                                                                        double tol = 1e-4);

// ---------------------------------------------------------------------------
// Bundle: "GYRONET1", key=value config lines, vocabulary, then named
// parameter blocks of little-endian doubles.

struct ModelBundle {
    Classifier model;
    std::vector<std::string> labels;
    optim::OptimizerState optimizer;
};

void write_bundle(std::ostream& out, const ModelBundle& bundle);
ModelBundle read_bundle(std::istream& in);
void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

}  // namespace gyronet::hypformer
