#include "gyronet/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gyronet::embed {

namespace geo = gyronet::geometry;

const char* to_string(Geometry g) {
    switch (g) {
        case Geometry::Euclidean: return "euclidean";
        case Geometry::Hyperboloid: return "hyperboloid";
        case Geometry::Poincare: return "poincare";
    }
    return "euclidean";
}

Geometry parse_geometry(const std::string& s) {
    if (s == "euclidean") return Geometry::Euclidean;
    if (s == "hyperboloid") return Geometry::Hyperboloid;
    if (s == "poincare") return Geometry::Poincare;
    throw EmbedError("unknown geometry '" + s + "' (expected euclidean|hyperboloid|poincare)");
}

DivergenceError::DivergenceError(int epoch, std::uint64_t step)
    : EmbedError("training diverged (non-finite value) in epoch " + std::to_string(epoch) + " at step " +
                 std::to_string(step)),
      epoch_(epoch),
      step_(step) {}

std::optional<std::size_t> Vocabulary::id(const std::string& token) const {
    auto it = index.find(token);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocab(const std::vector<std::string>& tokens, std::uint64_t min_count, double alpha) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& t : tokens) ++counts[t];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_count) kept.emplace_back(tok, n);
    }
    if (kept.empty()) {
        throw EmbedError("vocabulary is empty after applying min_count " + std::to_string(min_count));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) { return x.second > y.second; });

    Vocabulary v;
    double total = 0.0;
    for (auto& [tok, n] : kept) {
        v.index.emplace(tok, v.tokens.size());
        v.tokens.push_back(tok);
        v.counts.push_back(n);
        v.sampling.push_back(std::pow(static_cast<double>(n), alpha));
        total += v.sampling.back();
    }
    for (double& p : v.sampling) p /= total;
    return v;
}

std::vector<std::size_t> encode(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (auto id = vocab.id(t)) ids.push_back(*id);
    }
    return ids;
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab) : dist_(vocab.sampling.begin(), vocab.sampling.end()) {}

std::size_t NegativeSampler::draw(std::mt19937_64& rng, std::size_t avoid) {
    std::size_t w = dist_(rng);
    for (int tries = 0; tries < 10 && w == avoid; ++tries) {
        w = dist_(rng);
    }
    return w;
}

void for_each_pair(std::span<const std::size_t> ids, int window, int negatives, NegativeSampler& sampler,
                   std::mt19937_64& rng, const PairFn& fn) {
    if (window < 1) {
        throw EmbedError("window radius must be at least 1");
    }
    TrainingPair pair;
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        for (std::ptrdiff_t j = -window; j <= window; ++j) {
            if (j == 0 || k + j < 0 || k + j >= n) continue;
            pair.center = ids[static_cast<std::size_t>(k)];
            pair.context = ids[static_cast<std::size_t>(k + j)];
            pair.negatives.resize(static_cast<std::size_t>(std::max(negatives, 0)));
            for (auto& w : pair.negatives) w = sampler.draw(rng, pair.context);
            fn(pair);
        }
    }
}

std::vector<TrainingPair> generate_pairs(std::span<const std::size_t> ids, int window, int negatives,
                                         NegativeSampler& sampler, std::mt19937_64& rng) {
    std::vector<TrainingPair> out;
    for_each_pair(ids, window, negatives, sampler, rng, [&](const TrainingPair& p) { out.push_back(p); });
    return out;
}

double hyperboloid_logit(const geo::HyperboloidPoint& a, const geo::HyperboloidPoint& b, double theta) {
    return geo::lorentz_inner(a.coords(), b.coords()) + theta;
}

namespace {

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double logit(const EmbeddingMatrices& e, std::size_t center, std::size_t ctx, double theta) {
    const auto a = e.row_a(center);
    const auto b = e.row_b(ctx);
    if (e.geometry == Geometry::Hyperboloid) {
        return geo::lorentz_inner(a, b) + theta;
    }
    return geo::dot(a, b);
}

void check_ids(const TrainingPair& pair, const EmbeddingMatrices& e) {
    auto bad = [&](std::size_t id) { return id >= e.rows; };
    if (bad(pair.center) || bad(pair.context) || std::any_of(pair.negatives.begin(), pair.negatives.end(), bad)) {
        throw EmbedError("token id out of range");
    }
}

}  // namespace

double pair_log_likelihood(const TrainingPair& pair, const EmbeddingMatrices& e, double theta) {
    check_ids(pair, e);
    auto term = [&](std::size_t w, double sign) {
        const double z = logit(e, pair.center, w, theta);
        if (!std::isfinite(z)) throw EmbedError("non-finite logit");
        return log_sigmoid(sign * z);
    };
    double total = term(pair.context, 1.0);
    for (std::size_t w : pair.negatives) total += term(w, -1.0);
    return total;
}

PairGradients minkowski_gradients(const TrainingPair& pair, const EmbeddingMatrices& e, double theta) {
    if (e.geometry != Geometry::Hyperboloid) {
        throw EmbedError("minkowski_gradients needs hyperboloid embeddings");
    }
    check_ids(pair, e);
    const std::size_t width = e.width();
    PairGradients g;
    g.center.assign(width, 0.0);
    const auto a = e.row_a(pair.center);

    auto add_sample = [&](std::size_t w, double y) {
        const auto b = e.row_b(w);
        const double coeff = y - sigmoid(geo::lorentz_inner(a, b) + theta);
        for (std::size_t i = 0; i < width; ++i) g.center[i] += coeff * b[i];
        auto it = std::find_if(g.context.begin(), g.context.end(), [&](const auto& entry) { return entry.first == w; });
        if (it == g.context.end()) {
            g.context.emplace_back(w, geo::Vec(width, 0.0));
            it = std::prev(g.context.end());
        }
        for (std::size_t i = 0; i < width; ++i) it->second[i] += coeff * a[i];
    };
    add_sample(pair.context, 1.0);
    for (std::size_t w : pair.negatives) add_sample(w, 0.0);
    return g;
}

geo::HyperboloidPoint rsgd_step_hyperboloid(const geo::HyperboloidPoint& param, geo::ConstSpan ambient_grad,
                                            double eta) {
    if (ambient_grad.size() != param.coords().size()) {
        throw EmbedError("rsgd_step_hyperboloid: gradient dimension mismatch");
    }
    geo::Vec step(ambient_grad.size());
    for (std::size_t i = 0; i < step.size(); ++i) {
        if (!std::isfinite(ambient_grad[i])) throw EmbedError("non-finite gradient");
        step[i] = -eta * ambient_grad[i];
    }
    geo::Vec x = param.coords();
    geo::kernels::tangent_project(x, step);
    geo::kernels::exp_map_hyperboloid(x, step);
    return geo::HyperboloidPoint(std::move(x));
}

namespace {

void init_matrices(EmbeddingMatrices& e, const SkipGramConfig& cfg, std::mt19937_64& rng) {
    const std::size_t width = e.width();
    e.a.assign(e.rows * width, 0.0);
    e.b.assign(e.rows * width, 0.0);
    if (e.geometry == Geometry::Hyperboloid) {
        std::normal_distribution<double> gauss(0.0, cfg.init_sigma);
        for (auto* m : {&e.a, &e.b}) {
            for (std::size_t r = 0; r < e.rows; ++r) {
                std::span<double> row(m->data() + r * width, width);
                row[e.dim] = 1.0;
                geo::Vec v(width, 0.0);
                for (std::size_t i = 0; i < e.dim; ++i) v[i] = gauss(rng);
                geo::kernels::exp_map_hyperboloid(row, v);
            }
        }
    } else {
        // Classic word2vec start: small uniform centers, zero contexts.
        const double half = 0.5 / static_cast<double>(e.dim);
        std::uniform_real_distribution<double> uni(-half, half);
        for (double& x : e.a) x = uni(rng);
    }
}

std::vector<std::size_t> subsampled(const std::vector<std::size_t>& ids, const Vocabulary& vocab, double t,
                                    std::mt19937_64& rng) {
    double total = 0.0;
    for (auto c : vocab.counts) total += static_cast<double>(c);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) {
        const double f = static_cast<double>(vocab.counts[id]) / total;
        const double keep = std::min(1.0, std::sqrt(t / f) + t / f);
        if (uni(rng) < keep) out.push_back(id);
    }
    return out;
}

}  // namespace

SkipGramResult train_skipgram(const std::vector<std::string>& tokens, const SkipGramConfig& cfg,
                              const EpochFn& on_epoch) {
    if (cfg.geometry == Geometry::Poincare) {
        throw EmbedError("skip-gram trains in euclidean or hyperboloid geometry");
    }
    if (cfg.dim == 0 || cfg.epochs < 0 || cfg.negatives < 0 || !(cfg.lr > 0.0)) {
        throw EmbedError("invalid skip-gram configuration");
    }
    SkipGramResult res;
    res.vocab = build_vocab(tokens, cfg.min_count, cfg.alpha);
    const std::vector<std::size_t> ids = encode(res.vocab, tokens);

    std::mt19937_64 rng(cfg.seed);
    EmbeddingMatrices& e = res.embeddings;
    e.geometry = cfg.geometry;
    e.dim = cfg.dim;
    e.rows = res.vocab.size();
    init_matrices(e, cfg, rng);

    NegativeSampler sampler(res.vocab);
    const std::size_t width = e.width();
    const bool hyper = cfg.geometry == Geometry::Hyperboloid;
    std::vector<double> grad_a(width);
    std::vector<std::pair<std::size_t, std::vector<double>>> grad_b;
    std::vector<double> step(width);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<std::size_t> seq = cfg.subsample ? subsampled(ids, res.vocab, cfg.subsample_threshold, rng) : ids;
        double loss_sum = 0.0;
        std::uint64_t pairs = 0;
        for_each_pair(seq, cfg.window, cfg.negatives, sampler, rng, [&](const TrainingPair& pair) {
            // Gradients of log L, all taken at the pre-update parameters.
            const auto a = e.row_a(pair.center);
            std::fill(grad_a.begin(), grad_a.end(), 0.0);
            grad_b.clear();
            double ll = 0.0;
            auto sample = [&](std::size_t w, double y) {
                const auto b = e.row_b(w);
                const double z = hyper ? geo::lorentz_inner(a, b) + cfg.theta : geo::dot(a, b);
                ll += log_sigmoid(y > 0.5 ? z : -z);
                const double coeff = y - sigmoid(z);
                for (std::size_t i = 0; i < width; ++i) grad_a[i] += coeff * b[i];
                auto it = std::find_if(grad_b.begin(), grad_b.end(), [&](const auto& g) { return g.first == w; });
                if (it == grad_b.end()) {
                    grad_b.emplace_back(w, std::vector<double>(width, 0.0));
                    it = std::prev(grad_b.end());
                }
                for (std::size_t i = 0; i < width; ++i) it->second[i] += coeff * a[i];
            };
            sample(pair.context, 1.0);
            for (std::size_t w : pair.negatives) sample(w, 0.0);

            auto update = [&](std::span<double> row, const std::vector<double>& g) {
                if (hyper) {
                    // Ascent on log L is descent on the loss −log L.
                    for (std::size_t i = 0; i < width; ++i) step[i] = cfg.lr * g[i];
                    geo::kernels::tangent_project(row, step);
                    geo::kernels::exp_map_hyperboloid(row, step);
                } else {
                    for (std::size_t i = 0; i < width; ++i) row[i] += cfg.lr * g[i];
                }
                for (double v : row) {
                    if (!std::isfinite(v)) throw DivergenceError(epoch, pairs);
                }
            };
            update(e.row_a(pair.center), grad_a);
            for (const auto& [w, g] : grad_b) update(e.row_b(w), g);

            if (!std::isfinite(ll)) throw DivergenceError(epoch, pairs);
            loss_sum -= ll;
            ++pairs;
        });
        const double mean = pairs > 0 ? loss_sum / static_cast<double>(pairs) : 0.0;
        res.epoch_losses.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return res;
}

}  // namespace gyronet::embed
