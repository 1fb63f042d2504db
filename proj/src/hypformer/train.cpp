#include "gyronet/diff/hyperbolic.hpp"
#include "gyronet/hypformer.hpp"

#include <algorithm>
#include <numeric>

namespace gyronet::hypformer {

namespace {

std::size_t argmax_row(const Tensor& t, std::size_t r) {
    const auto row = t.row_span(r);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

std::vector<EpochStats> train_classifier(Classifier& model, optim::Optimizer& optimizer,
                                         const std::vector<Example>& train, const TrainOptions& options,
                                         const EpochCallback& on_epoch) {
    if (train.empty()) throw ModelError("no training examples");
    if (options.batch_size == 0) throw ModelError("batch_size must be positive");
    for (const Example& e : train) {
        if (e.label >= model.config().num_classes) throw ModelError("label out of range");
    }
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<EpochStats> history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.restarted = optimizer.begin_epoch(epoch);
        stats.lr_euclidean = optimizer.lr_euclidean();
        stats.lr_riemannian = optimizer.lr_riemannian();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            std::vector<Example> chunk;
            chunk.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) chunk.push_back(train[order[i]]);
            const SequenceBatch batch = make_batch(chunk, model.config().max_seq_len);

            Tape tape;
            Var logits = classifier_logits(tape, model, batch, {true, &rng});
            Var loss = diff::hyp::cross_entropy(logits, batch.labels);
            const diff::Gradients grads = tape.backward(loss);
            optimizer.step(model.params(), grads);

            loss_sum += loss.value().item() * static_cast<double>(batch.size());
            for (std::size_t b = 0; b < batch.size(); ++b) correct += argmax_row(logits.value(), b) == batch.labels[b];
        }
        stats.loss = loss_sum / static_cast<double>(train.size());
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
        history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return history;
}

Evaluation evaluate(const Classifier& model, const std::vector<Example>& examples, std::size_t batch_size) {
    Evaluation ev;
    if (examples.empty()) return ev;
    if (batch_size == 0) throw ModelError("batch_size must be positive");
    double ce = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < examples.size(); start += batch_size) {
        const std::size_t end = std::min(examples.size(), start + batch_size);
        const std::vector<Example> chunk(examples.begin() + static_cast<std::ptrdiff_t>(start),
                                         examples.begin() + static_cast<std::ptrdiff_t>(end));
        const SequenceBatch batch = make_batch(chunk, model.config().max_seq_len);
        Tape tape;
        Var logp = diff::hyp::log_softmax(classifier_logits(tape, model, batch));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            if (batch.labels[b] >= logp.shape().cols) throw ModelError("label out of range");
            ce -= logp.value()(b, batch.labels[b]);
            correct += argmax_row(logp.value(), b) == batch.labels[b];
        }
    }
    ev.count = examples.size();
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.count);
    ev.cross_entropy = ce / static_cast<double>(ev.count);
    return ev;
}

std::map<std::string, diff::GradCheckReport> check_classifier_gradients(const Classifier& model,
                                                                        const SequenceBatch& batch, double h,
                                                                        double tol) {
    Tape tape;
    Var loss = diff::hyp::cross_entropy(classifier_logits(tape, model, batch), batch.labels);
    tape.mark_output("loss", loss);
    const diff::Gradients grads = tape.backward(loss);
    std::map<std::string, diff::GradCheckReport> out;
    for (const optim::Parameter& p : model.params()) {
        if (!p.trainable) continue;
        auto fn = [&](std::span<const double> x) {
            Tensor value(p.shape, std::vector<double>(x.begin(), x.end()), true);
            return tape.forward({{p.name, value}}).at("loss").item();
        };
        auto numeric = diff::numeric_gradient(fn, p.data, h);
        tape.forward({{p.name, p.tensor()}});
        const auto analytic = grads[p.name].data();
        out[p.name] = diff::compare_gradients({analytic.begin(), analytic.end()}, std::move(numeric), tol);
    }
    return out;
}

}  // namespace gyronet::hypformer
