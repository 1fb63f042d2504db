#include "gyronet/diff/hyperbolic.hpp"
#include "gyronet/hypformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gyronet::hypformer {

namespace hyp = diff::hyp;
using diff::Axis;
using optim::ParamKind;
using optim::Parameter;

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || v.front() == '-') throw ModelError(key + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) throw ModelError(key + ": expected a number, got '" + v + "'");
    return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ModelError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> glorot(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<double> out(rows * cols);
    for (double& v : out) v = u(rng);
    return out;
}

std::string layer_name(std::size_t l, const char* part) { return "layer" + std::to_string(l) + "." + part; }

std::map<std::string, diff::Shape> expected_layout(const TransformerConfig& c, std::size_t vocab) {
    const std::size_t n = c.model_dim;
    const std::size_t proj = c.heads * c.resolved_head_dim();
    const std::size_t f = c.resolved_ffn_dim();
    const std::size_t k = c.num_classes;
    std::map<std::string, diff::Shape> out{{"embed", {vocab, n}}, {"unk", {1, n}}};
    for (std::size_t l = 0; l < c.layers; ++l) {
        out[layer_name(l, "wq")] = {proj, n};
        out[layer_name(l, "wk")] = {proj, n};
        out[layer_name(l, "wv")] = {proj, n};
        out[layer_name(l, "wo")] = {n, proj};
        out[layer_name(l, "ffn.m1")] = {f, n};
        out[layer_name(l, "ffn.b1")] = {1, f};
        out[layer_name(l, "ffn.m2")] = {n, f};
        out[layer_name(l, "ffn.b2")] = {1, n};
    }
    if (c.geometry == ModelGeometry::Hyperbolic) {
        out["mlr.p"] = {k, n};
        out["mlr.a"] = {k, n};
    } else {
        out["out.w"] = {k, n};
        out["out.b"] = {1, k};
    }
    return out;
}

}  // namespace

void TransformerConfig::validate() const {
    if (layers < 1) throw ModelError("layers must be at least 1");
    if (heads < 1) throw ModelError("heads must be at least 1");
    if (model_dim < 1) throw ModelError("model_dim must be at least 1");
    if (head_dim == 0 && model_dim % heads != 0) {
        throw ModelError("model_dim " + std::to_string(model_dim) + " is not divisible by " + std::to_string(heads) +
                         " heads; set head_dim explicitly");
    }
    if (resolved_head_dim() < 1) throw ModelError("head_dim must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ModelError("dropout must lie in [0, 1)");
    if (max_seq_len < 1) throw ModelError("max_seq_len must be at least 1");
    if (num_classes < 1) throw ModelError("num_classes must be at least 1");
}

std::map<std::string, std::string> TransformerConfig::to_map() const {
    return {
        {"geometry", to_string(geometry)},
        {"layers", std::to_string(layers)},
        {"heads", std::to_string(heads)},
        {"model_dim", std::to_string(model_dim)},
        {"head_dim", std::to_string(head_dim)},
        {"ffn_dim", std::to_string(ffn_dim)},
        {"dropout", format_double(dropout)},
        {"max_seq_len", std::to_string(max_seq_len)},
        {"num_classes", std::to_string(num_classes)},
        {"residual", residual ? "true" : "false"},
        {"fine_tune_embeddings", fine_tune_embeddings ? "true" : "false"},
    };
}

TransformerConfig TransformerConfig::from_map(const std::map<std::string, std::string>& kv) {
    TransformerConfig c;
    for (const auto& [k, v] : kv) {
        if (k == "geometry") c.geometry = parse_model_geometry(v);
        else if (k == "layers") c.layers = parse_size(k, v);
        else if (k == "heads") c.heads = parse_size(k, v);
        else if (k == "model_dim") c.model_dim = parse_size(k, v);
        else if (k == "head_dim") c.head_dim = parse_size(k, v);
        else if (k == "ffn_dim") c.ffn_dim = parse_size(k, v);
        else if (k == "dropout") c.dropout = parse_real(k, v);
        else if (k == "max_seq_len") c.max_seq_len = parse_size(k, v);
        else if (k == "num_classes") c.num_classes = parse_size(k, v);
        else if (k == "residual") c.residual = parse_bool(k, v);
        else if (k == "fine_tune_embeddings") c.fine_tune_embeddings = parse_bool(k, v);
        else throw ModelError("unknown model setting '" + k + "'");
    }
    c.validate();
    return c;
}

SequenceBatch make_batch(const std::vector<Example>& examples, std::size_t max_len) {
    SequenceBatch b;
    for (const Example& e : examples) {
        if (e.ids.empty()) throw ModelError("empty sequence in batch");
        b.seq_len = std::max(b.seq_len, std::min(e.ids.size(), max_len));
    }
    b.ids.assign(examples.size() * b.seq_len, 0);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const std::size_t len = std::min(examples[i].ids.size(), max_len);
        std::copy_n(examples[i].ids.begin(), len, b.ids.begin() + i * b.seq_len);
        b.lengths.push_back(len);
        b.labels.push_back(examples[i].label);
    }
    return b;
}

Classifier::Classifier(TransformerConfig config, std::vector<std::string> vocab, std::vector<Parameter> params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
    config_.validate();
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        if (!token_index_.emplace(vocab_[i], i).second) throw ModelError("duplicate vocabulary token");
    }
    const auto layout = expected_layout(config_, vocab_.size());
    std::map<std::string, bool> seen;
    for (const Parameter& p : params_) {
        const auto it = layout.find(p.name);
        if (it == layout.end()) throw ModelError("unexpected parameter '" + p.name + "'");
        if (p.shape != it->second || p.data.size() != p.shape.size()) {
            throw ModelError("parameter '" + p.name + "' has shape " + diff::to_string(p.shape) + ", expected " +
                             diff::to_string(it->second));
        }
        if (!seen.emplace(p.name, true).second) throw ModelError("duplicate parameter '" + p.name + "'");
    }
    for (const auto& [name, shape] : layout) {
        if (!seen.count(name)) throw ModelError("missing parameter '" + name + "'");
    }
}

Classifier Classifier::initialize(const TransformerConfig& config, std::vector<std::string> vocab,
                                  std::vector<double> embeddings, std::uint64_t seed) {
    config.validate();
    const std::size_t n = config.model_dim;
    const std::size_t h = config.resolved_head_dim();
    const std::size_t proj = config.heads * h;
    const std::size_t f = config.resolved_ffn_dim();
    const std::size_t k = config.num_classes;
    const bool ball = config.geometry == ModelGeometry::Hyperbolic;
    const ParamKind point = ball ? ParamKind::Poincare : ParamKind::Euclidean;
    if (embeddings.size() != vocab.size() * n) {
        throw ModelError("embedding values do not match " + std::to_string(vocab.size()) + " x " + std::to_string(n));
    }
    if (ball) {
        for (std::size_t r = 0; r < vocab.size(); ++r) {
            std::span<double> row(embeddings.data() + r * n, n);
            if (geometry::norm(row) >= 1.0) {
                throw ModelError("embedding for token " + std::to_string(r) + " lies outside the unit ball");
            }
            const auto clamped = geometry::clamp_to_ball({row.begin(), row.end()}, 1.0);
            std::copy(clamped.begin(), clamped.end(), row.begin());
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<Parameter> params;
    params.push_back({"embed", {vocab.size(), n}, std::move(embeddings), point, config.fine_tune_embeddings});
    std::normal_distribution<double> small(0.0, 1e-3);
    std::vector<double> unk(n);
    for (double& v : unk) v = small(rng);
    params.push_back({"unk", {1, n}, unk, point, true});
    for (std::size_t l = 0; l < config.layers; ++l) {
        params.push_back({layer_name(l, "wq"), {proj, n}, glorot(rng, proj, n), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "wk"), {proj, n}, glorot(rng, proj, n), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "wv"), {proj, n}, glorot(rng, proj, n), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "wo"), {n, proj}, glorot(rng, n, proj), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "ffn.m1"), {f, n}, glorot(rng, f, n), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "ffn.b1"), {1, f}, std::vector<double>(f, 0.0), point, true});
        params.push_back({layer_name(l, "ffn.m2"), {n, f}, glorot(rng, n, f), ParamKind::Euclidean, true});
        params.push_back({layer_name(l, "ffn.b2"), {1, n}, std::vector<double>(n, 0.0), point, true});
    }
    if (ball) {
        params.push_back({"mlr.p", {k, n}, std::vector<double>(k * n, 0.0), ParamKind::Poincare, true});
        params.push_back({"mlr.a", {k, n}, glorot(rng, k, n), ParamKind::Euclidean, true});
    } else {
        params.push_back({"out.w", {k, n}, glorot(rng, k, n), ParamKind::Euclidean, true});
        params.push_back({"out.b", {1, k}, std::vector<double>(k, 0.0), ParamKind::Euclidean, true});
    }
    return Classifier(config, std::move(vocab), std::move(params));
}

std::size_t Classifier::token_id(const std::string& token) const {
    const auto it = token_index_.find(token);
    return it == token_index_.end() ? unk_id() : it->second;
}

const Parameter& Classifier::param(const std::string& name) const {
    for (const Parameter& p : params_) {
        if (p.name == name) return p;
    }
    throw ModelError("model has no parameter '" + name + "'");
}

Parameter& Classifier::param(const std::string& name) {
    return const_cast<Parameter&>(static_cast<const Classifier&>(*this).param(name));
}

Var classifier_logits(Tape& tape, const Classifier& model, const SequenceBatch& batch, const ForwardOptions& options) {
    const TransformerConfig& cfg = model.config();
    const ModelGeometry g = cfg.geometry;
    const bool ball = g == ModelGeometry::Hyperbolic;
    const std::size_t n = cfg.model_dim;
    const std::size_t L = batch.seq_len;
    const std::size_t rows = batch.size() * L;
    if (batch.size() == 0 || L == 0 || batch.ids.size() != rows) throw ModelError("malformed sequence batch");
    if (L > cfg.max_seq_len) throw ModelError("batch sequences exceed max_seq_len");
    const bool dropping = options.training && cfg.dropout > 0.0;
    if (dropping && options.rng == nullptr) throw ModelError("training with dropout needs a random generator");

    std::map<std::string, Var> p;
    for (const Parameter& param : model.params()) p[param.name] = tape.input(param.name, param.tensor());

    // Token lookup. Padding rows stay at the origin.
    const Parameter& embed = model.param("embed");
    const std::size_t vocab = embed.shape.rows;
    diff::TensorBuilder unk_sel({rows, 1});
    std::vector<bool> live(rows, false);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t i = 0; i < batch.lengths[b]; ++i) live[b * L + i] = true;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!live[r]) continue;
        if (batch.ids[r] > vocab) throw ModelError("token id " + std::to_string(batch.ids[r]) + " out of range");
        if (batch.ids[r] == vocab) unk_sel(r, 0) = 1.0;
    }
    Var x;
    if (embed.trainable) {
        diff::TensorBuilder onehot({rows, vocab});
        for (std::size_t r = 0; r < rows; ++r) {
            if (live[r] && batch.ids[r] < vocab) onehot(r, batch.ids[r]) = 1.0;
        }
        x = tape.matmul(tape.constant(std::move(onehot).build()), p.at("embed"));
    } else {
        diff::TensorBuilder gathered({rows, n});
        for (std::size_t r = 0; r < rows; ++r) {
            if (!live[r] || batch.ids[r] == vocab) continue;
            const auto src = embed.data.begin() + static_cast<std::ptrdiff_t>(batch.ids[r] * n);
            std::copy(src, src + static_cast<std::ptrdiff_t>(n), gathered.row_span(r).begin());
        }
        x = tape.constant(std::move(gathered).build());
    }
    x = x + tape.constant(std::move(unk_sel).build()) * p.at("unk");

    diff::TensorBuilder pe({rows, n});
    for (std::size_t r = 0; r < rows; ++r) {
        const auto enc = positional_encoding(r % L, n);
        std::copy(enc.begin(), enc.end(), pe.row_span(r).begin());
    }
    x = attach_positions(x, tape.constant(std::move(pe).build()), g);

    Var mask = tape.constant(attention_mask(batch.lengths, L));
    const std::size_t h = cfg.resolved_head_dim();
    std::mt19937_64 unused;
    std::mt19937_64& rng = options.rng ? *options.rng : unused;
    auto combine = [&](Var base, Var update) {
        if (!cfg.residual) return update;
        return ball ? hyp::mobius_add(base, update) : base + update;
    };
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        auto q = split_heads(p.at(layer_name(l, "wq")), x, cfg.heads, g);
        auto k = split_heads(p.at(layer_name(l, "wk")), x, cfg.heads, g);
        auto v = split_heads(p.at(layer_name(l, "wv")), x, cfg.heads, g);
        std::vector<Var> attended;
        std::vector<Var> out_proj;
        Var wo = p.at(layer_name(l, "wo"));
        for (std::size_t i = 0; i < cfg.heads; ++i) {
            attended.push_back(ball ? hyperbolic_attention(q[i], k[i], v[i], mask)
                                    : scaled_dot_attention(q[i], k[i], v[i], mask));
            out_proj.push_back(tape.slice(wo, Axis::Cols, i * h, (i + 1) * h));
        }
        Var a = tangent_dropout(merge_heads(attended, out_proj, g), cfg.dropout, rng, dropping, g);
        x = combine(x, a);
        Var f = feed_forward(x, p.at(layer_name(l, "ffn.m1")), p.at(layer_name(l, "ffn.b1")),
                             p.at(layer_name(l, "ffn.m2")), p.at(layer_name(l, "ffn.b2")), g);
        x = combine(x, tangent_dropout(f, cfg.dropout, rng, dropping, g));
    }

    Var pooled = pool(x, batch.lengths, L, g);
    if (ball) return hyperbolic_mlr(pooled, p.at("mlr.p"), p.at("mlr.a"));
    return tape.matmul(pooled, p.at("out.w"), false, true) + p.at("out.b");
}

Tensor classifier_forward(const Classifier& model, const SequenceBatch& batch) {
    Tape tape;
    Var logits = classifier_logits(tape, model, batch);
    return tape.softmax(logits).value();
}

}  // namespace gyronet::hypformer
