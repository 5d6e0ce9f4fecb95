#include "cfs/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "cfs/rng.hpp"
#include "json.hpp"

namespace cfs::models {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) throw Error(code, msg);
}

// Leases a parameter set onto a tape and resolves names to leaf vars.
class Net {
public:
    Net(Tape& tape, std::span<const std::string> names, std::span<const Tensor> weights) {
        vars_.reserve(weights.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            vars_.push_back(tape.leaf(weights[i]));
            index_.emplace(names[i], i);
        }
    }

    // Wrap parameters that are already on the tape.
    Net(std::span<const std::string> names, std::span<const Var> vars)
        : vars_(vars.begin(), vars.end()) {
        for (std::size_t i = 0; i < vars_.size(); ++i) index_.emplace(names[i], i);
    }

    Var p(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), ErrorCode::InvalidSpec, "unknown parameter " + name);
        return vars_[it->second];
    }

    std::span<const Var> vars() const { return vars_; }

private:
    std::vector<Var> vars_;
    std::unordered_map<std::string, std::size_t> index_;
};

std::string idx_name(const char* prefix, int i, const char* suffix) {
    return std::string(prefix) + std::to_string(i) + suffix;
}

Var decode(Tape& t, const Net& net, Var h) {
    return nn::leaky_relu(t, nn::linear(t, h, net.p("dec.w"), net.p("dec.b")));
}

Var fcn_forward(Tape& t, const Net& net, const ModelSpec& spec, Var x) {
    Var h = nn::linear(t, x, net.p("enc.w"), net.p("enc.b"));
    for (int l = 0; l < spec.layers; ++l)
        h = nn::leaky_relu(
            t, nn::linear(t, h, net.p(idx_name("fc.", l, ".w")), net.p(idx_name("fc.", l, ".b"))));
    return decode(t, net, h);
}

// One RNN step over all layers; `h` holds per-layer states and is updated.
Var rnn_step(Tape& t, const Net& net, const ModelSpec& spec, Var x, std::vector<Var>& h) {
    Var inp = nn::linear(t, x, net.p("enc.w"), net.p("enc.b"));
    for (int l = 0; l < spec.layers; ++l) {
        nn::GruWeights w{net.p(idx_name("gru.", l, ".w_ih")), net.p(idx_name("gru.", l, ".w_hh")),
                         net.p(idx_name("gru.", l, ".b_ih")), net.p(idx_name("gru.", l, ".b_hh"))};
        h[static_cast<std::size_t>(l)] = nn::gru_cell(t, inp, h[static_cast<std::size_t>(l)], w);
        inp = h[static_cast<std::size_t>(l)];
    }
    return decode(t, net, inp);
}

Var transformer_forward(Tape& t, const Net& net, const ModelSpec& spec, Var tokens) {
    const std::size_t seq = t.value(tokens).shape[0];
    const int heads = resolve_heads(spec.hidden, spec.heads);
    Var x = nn::linear(t, tokens, net.p("enc.w"), net.p("enc.b"));
    x = nn::add_const(t, x, nn::positional_encoding(seq, static_cast<std::size_t>(spec.hidden)));
    for (int l = 0; l < spec.layers; ++l) {
        const std::string b = "blk." + std::to_string(l) + ".";
        Var q = nn::linear(t, x, net.p(b + "q.w"), net.p(b + "q.b"));
        Var k = nn::linear(t, x, net.p(b + "k.w"), net.p(b + "k.b"));
        Var v = nn::linear(t, x, net.p(b + "v.w"), net.p(b + "v.b"));
        Var att = nn::causal_attention(t, q, k, v, heads);
        x = nn::add(t, x, nn::linear(t, att, net.p(b + "o.w"), net.p(b + "o.b")));
        Var f = nn::leaky_relu(t, nn::linear(t, x, net.p(b + "ff1.w"), net.p(b + "ff1.b")));
        x = nn::add(t, x, nn::linear(t, f, net.p(b + "ff2.w"), net.p(b + "ff2.b")));
    }
    return decode(t, net, x);
}

Tensor stack_windows(std::span<const WindowedExample* const> windows) {
    Tensor x({windows.size(), WindowedExample::kRows * WindowedExample::kCols});
    for (std::size_t i = 0; i < windows.size(); ++i) {
        require(windows[i]->x.size() == 300, ErrorCode::ShapeMismatch,
                "window must be 100x3");
        std::copy(windows[i]->x.begin(), windows[i]->x.end(), x.data.begin() + 300 * i);
    }
    return x;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
}

std::vector<std::string> param_names(const ModelParams& mp) {
    std::vector<std::string> names;
    names.reserve(mp.params.size());
    for (const auto& [n, t] : mp.params) names.push_back(n);
    return names;
}

std::vector<Tensor> param_values(const ModelParams& mp) {
    std::vector<Tensor> w;
    w.reserve(mp.params.size());
    for (const auto& [n, t] : mp.params) w.push_back(t);
    return w;
}

// Causal per-episode predictions with an arbitrary weight set.
std::vector<double> predict_episode(const ModelSpec& spec, std::span<const std::string> names,
                                    std::span<const Tensor> weights,
                                    const std::vector<WindowedExample>& windows) {
    std::vector<double> preds;
    preds.reserve(windows.size());
    if (windows.empty()) return preds;

    if (spec.kind == ModelKind::Fcn) {
        std::vector<const WindowedExample*> refs;
        refs.reserve(windows.size());
        for (const auto& w : windows) refs.push_back(&w);
        Tape t;
        Net net(t, names, weights);
        Var out = fcn_forward(t, net, spec, t.leaf(stack_windows(refs)));
        preds = t.value(out).data;
        return preds;
    }
    if (spec.kind == ModelKind::Rnn) {
        std::vector<Tensor> state(static_cast<std::size_t>(spec.layers),
                                  Tensor({1, static_cast<std::size_t>(spec.hidden)}));
        for (const auto& w : windows) {
            Tape t;
            Net net(t, names, weights);
            std::vector<Var> h;
            h.reserve(state.size());
            for (const Tensor& s : state) h.push_back(t.leaf(s));
            Var out = rnn_step(t, net, spec, t.leaf(Tensor::row(w.x)), h);
            for (std::size_t l = 0; l < state.size(); ++l) state[l] = t.value(h[l]);
            preds.push_back(t.value(out).data[0]);
        }
        return preds;
    }
    // Transformer: one causal pass over the whole episode.
    Tape t;
    Net net(t, names, weights);
    Tensor tokens({windows.size(), 300});
    for (std::size_t i = 0; i < windows.size(); ++i)
        std::copy(windows[i].x.begin(), windows[i].x.end(), tokens.data.begin() + 300 * i);
    Var out = transformer_forward(t, net, spec, t.leaf(tokens));
    preds = t.value(out).data;
    return preds;
}

double dataset_mae(const ModelSpec& spec, std::span<const std::string> names,
                   std::span<const Tensor> weights, const prep::WindowedDataset& dataset,
                   std::span<const int> episode_ids) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int id : episode_ids) {
        const auto& ep = dataset[static_cast<std::size_t>(id)];
        const auto preds = predict_episode(spec, names, weights, ep.examples);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            acc += std::abs(preds[i] - ep.examples[i].y);
            ++count;
        }
    }
    require(count > 0, ErrorCode::EmptyDataset, "evaluate: no windows");
    return acc / static_cast<double>(count);
}

}  // namespace

std::string kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Fcn: return "fcn";
        case ModelKind::Rnn: return "rnn";
        case ModelKind::Transformer: return "transformer";
    }
    return "?";
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "fcn") return ModelKind::Fcn;
    if (name == "rnn") return ModelKind::Rnn;
    if (name == "transformer") return ModelKind::Transformer;
    throw Error(ErrorCode::InvalidSpec, "unknown model kind '" + name + "'");
}

int resolve_heads(int hidden, int heads) {
    if (heads > 0) {
        require(hidden % heads == 0, ErrorCode::InvalidSpec,
                "hidden dim " + std::to_string(hidden) + " not divisible by " +
                    std::to_string(heads) + " heads");
        return heads;
    }
    for (int h : {12, 8, 4, 2, 1})
        if (hidden % h == 0) return h;
    return 1;
}

void validate_spec(const ModelSpec& spec) {
    require(spec.layers >= 1, ErrorCode::InvalidSpec, "layers must be >= 1");
    require(spec.hidden >= 1, ErrorCode::InvalidSpec, "hidden must be >= 1");
    require(spec.input >= 1, ErrorCode::InvalidSpec, "input must be >= 1");
    if (spec.kind == ModelKind::Transformer) resolve_heads(spec.hidden, spec.heads);
}

const Tensor& ModelParams::tensor(const std::string& name) const {
    for (const auto& [n, t] : params)
        if (n == name) return t;
    throw Error(ErrorCode::InvalidSpec, "no parameter named " + name);
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params) n += t.numel();
    return n;
}

ModelParams build_model(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    ModelParams mp;
    mp.spec = spec;
    Rng rng(seed, 0xb111d);

    auto tensor = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
        Tensor t(std::move(shape));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : t.data) v = rng.uniform(-bound, bound);
        return t;
    };
    auto lin = [&](const std::string& prefix, std::size_t out, std::size_t in) {
        mp.params.emplace_back(prefix + ".w", tensor({out, in}, in));
        mp.params.emplace_back(prefix + ".b", tensor({out}, in));
    };

    const auto hidden = static_cast<std::size_t>(spec.hidden);
    const auto input = static_cast<std::size_t>(spec.input);
    lin("enc", hidden, input);
    switch (spec.kind) {
        case ModelKind::Fcn:
            for (int l = 0; l < spec.layers; ++l)
                lin("fc." + std::to_string(l), hidden, hidden);
            break;
        case ModelKind::Rnn:
            for (int l = 0; l < spec.layers; ++l) {
                const std::string p = "gru." + std::to_string(l);
                mp.params.emplace_back(p + ".w_ih", tensor({3 * hidden, hidden}, hidden));
                mp.params.emplace_back(p + ".w_hh", tensor({3 * hidden, hidden}, hidden));
                mp.params.emplace_back(p + ".b_ih", tensor({3 * hidden}, hidden));
                mp.params.emplace_back(p + ".b_hh", tensor({3 * hidden}, hidden));
            }
            break;
        case ModelKind::Transformer:
            for (int l = 0; l < spec.layers; ++l) {
                const std::string p = "blk." + std::to_string(l);
                lin(p + ".q", hidden, hidden);
                lin(p + ".k", hidden, hidden);
                lin(p + ".v", hidden, hidden);
                lin(p + ".o", hidden, hidden);
                lin(p + ".ff1", 4 * hidden, hidden);
                lin(p + ".ff2", hidden, 4 * hidden);
            }
            break;
    }
    lin("dec", 1, hidden);
    return mp;
}

double predict_instant(const ModelParams& model, std::span<const double> window) {
    require(model.spec.kind == ModelKind::Fcn, ErrorCode::KindMismatch,
            "predict_instant expects an FCN model");
    require(window.size() == static_cast<std::size_t>(model.spec.input),
            ErrorCode::ShapeMismatch, "window size must match model input");
    Tape t;
    const auto names = param_names(model);
    const auto weights = param_values(model);
    Net net(t, names, weights);
    Var out = fcn_forward(t, net, model.spec, t.leaf(Tensor::row(window)));
    return t.value(out).data[0];
}

std::vector<double> predict_sequence(const ModelParams& model,
                                     const std::vector<WindowedExample>& windows) {
    require(model.spec.kind != ModelKind::Fcn, ErrorCode::KindMismatch,
            "predict_sequence expects a sequence model");
    const auto names = param_names(model);
    const auto weights = param_values(model);
    return predict_episode(model.spec, names, weights, windows);
}

SequenceRunner::SequenceRunner(const ModelParams& model) : model_(model) { reset(); }

void SequenceRunner::reset() {
    hidden_.assign(static_cast<std::size_t>(model_.spec.layers),
                   Tensor({1, static_cast<std::size_t>(model_.spec.hidden)}));
    history_.clear();
}

double SequenceRunner::step(std::span<const double> window) {
    require(window.size() == static_cast<std::size_t>(model_.spec.input),
            ErrorCode::ShapeMismatch, "window size must match model input");
    const auto names = param_names(model_);
    const auto weights = param_values(model_);
    if (model_.spec.kind == ModelKind::Fcn) {
        Tape t;
        Net net(t, names, weights);
        return t.value(fcn_forward(t, net, model_.spec, t.leaf(Tensor::row(window)))).data[0];
    }
    if (model_.spec.kind == ModelKind::Rnn) {
        Tape t;
        Net net(t, names, weights);
        std::vector<Var> h;
        h.reserve(hidden_.size());
        for (const Tensor& s : hidden_) h.push_back(t.leaf(s));
        Var out = rnn_step(t, net, model_.spec, t.leaf(Tensor::row(window)), h);
        for (std::size_t l = 0; l < hidden_.size(); ++l) hidden_[l] = t.value(h[l]);
        return t.value(out).data[0];
    }
    history_.emplace_back(window.begin(), window.end());
    Tape t;
    Net net(t, names, weights);
    Tensor tokens({history_.size(), 300});
    for (std::size_t i = 0; i < history_.size(); ++i)
        std::copy(history_[i].begin(), history_[i].end(), tokens.data.begin() + 300 * i);
    Var out = transformer_forward(t, net, model_.spec, t.leaf(tokens));
    return t.value(out).data[history_.size() - 1];
}

double default_lr(const ModelSpec& spec) {
    if (spec.kind == ModelKind::Rnn && spec.layers >= 8) return 1e-5;
    if (spec.kind == ModelKind::Transformer && spec.layers >= 4) return 1e-5;
    return 1e-3;
}

Split split_episodes(std::size_t count, std::uint64_t seed, double train_frac, double val_frac) {
    require(count > 0, ErrorCode::EmptyDataset, "split_episodes: empty dataset");
    require(train_frac > 0.0 && train_frac <= 1.0 && val_frac >= 0.0 &&
                train_frac + val_frac <= 1.0 + 1e-12,
            ErrorCode::InvalidSpec, "split_episodes: bad fractions");
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    Rng rng(seed, 0x5b11f);
    shuffle_indices(idx, rng);

    std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * count));
    n_train = std::max<std::size_t>(1, std::min(n_train, count));
    std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * count));
    n_val = std::min(n_val, count - n_train);

    Split split;
    for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(static_cast<int>(idx[i]));
    for (std::size_t i = n_train; i < n_train + n_val; ++i)
        split.val.push_back(static_cast<int>(idx[i]));
    for (std::size_t i = n_train + n_val; i < count; ++i)
        split.test.push_back(static_cast<int>(idx[i]));
    if (split.val.empty()) split.val = split.train;  // tiny-dataset fallback
    return split;
}

TrainResult train(const ModelParams& init, const prep::WindowedDataset& dataset,
                  const TrainConfig& cfg) {
    validate_spec(init.spec);
    require(!dataset.empty(), ErrorCode::EmptyDataset, "train: empty dataset");
    require(cfg.lr > 0.0, ErrorCode::InvalidSpec, "train: lr must be positive");
    require(cfg.batch >= 1 && cfg.max_epochs >= 1 && cfg.bptt >= 1, ErrorCode::InvalidSpec,
            "train: bad config");

    const ModelSpec spec = init.spec;
    const auto names = param_names(init);
    std::vector<Tensor> weights = param_values(init);
    TrainResult result;
    result.split = split_episodes(dataset.size(), cfg.split_seed, cfg.train_frac, cfg.val_frac);

    nn::AdamState adam;
    adam.lr = cfg.lr;

    // Assemble the training views once; epoch order is reshuffled in place.
    std::vector<const WindowedExample*> fcn_windows;
    std::vector<const prep::WindowedEpisode*> train_eps;
    for (int id : result.split.train) {
        const auto& ep = dataset[static_cast<std::size_t>(id)];
        train_eps.push_back(&ep);
        for (const auto& w : ep.examples) fcn_windows.push_back(&w);
    }
    require(!fcn_windows.empty(), ErrorCode::EmptyDataset, "train: no training windows");

    std::size_t t_common = SIZE_MAX;
    for (const auto* ep : train_eps) t_common = std::min(t_common, ep->examples.size());

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_weights = weights;
    int since_best = 0;

    auto step_batch = [&](const Tensor& x, const Tensor& y) {
        Tape t;
        Net net(t, names, weights);
        Var loss = nn::huber_loss(t, fcn_forward(t, net, spec, t.leaf(x)), t.leaf(y),
                                  cfg.huber_delta);
        const double value = t.value(loss).data[0];
        t.backward(loss);
        std::vector<Tensor> grads;
        grads.reserve(weights.size());
        for (Var v : net.vars()) grads.push_back(t.grad(v));
        nn::adam_step(weights, grads, adam);
        return value;
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng rng(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch) + 0xe90c);
        double loss_acc = 0.0;
        double loss_weight = 0.0;

        if (spec.kind == ModelKind::Fcn) {
            std::vector<std::size_t> order(fcn_windows.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle_indices(order, rng);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
                std::vector<const WindowedExample*> batch;
                batch.reserve(stop - start);
                for (std::size_t i = start; i < stop; ++i) batch.push_back(fcn_windows[order[i]]);
                Tensor x = stack_windows(batch);
                Tensor y({batch.size(), 1});
                for (std::size_t i = 0; i < batch.size(); ++i) y.data[i] = batch[i]->y;
                const double value = step_batch(x, y);
                loss_acc += value * static_cast<double>(stop - start);
                loss_weight += static_cast<double>(stop - start);
            }
        } else if (spec.kind == ModelKind::Rnn) {
            // Episodes advance in groups of cfg.seq_batch; within a group,
            // segments of cfg.bptt windows with detached state carry-over.
            std::vector<std::size_t> order(train_eps.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle_indices(order, rng);
            const std::size_t group_size =
                std::max<std::size_t>(1, static_cast<std::size_t>(cfg.seq_batch));
            for (std::size_t g0 = 0; g0 < order.size(); g0 += group_size) {
                const std::size_t g1 = std::min(order.size(), g0 + group_size);
                const std::size_t batch = g1 - g0;
                std::vector<Tensor> state(static_cast<std::size_t>(spec.layers),
                                          Tensor({batch, static_cast<std::size_t>(spec.hidden)}));
                for (std::size_t seg = 0; seg < t_common;
                     seg += static_cast<std::size_t>(cfg.bptt)) {
                    const std::size_t seg_end =
                        std::min(t_common, seg + static_cast<std::size_t>(cfg.bptt));
                    Tape t;
                    Net net(t, names, weights);
                    std::vector<Var> h;
                    h.reserve(state.size());
                    for (const Tensor& s : state) h.push_back(t.leaf(s));
                    Var loss_sum{-1};
                    for (std::size_t step = seg; step < seg_end; ++step) {
                        Tensor x({batch, 300});
                        Tensor y({batch, 1});
                        for (std::size_t b = 0; b < batch; ++b) {
                            const auto& ex = train_eps[order[g0 + b]]->examples[step];
                            std::copy(ex.x.begin(), ex.x.end(), x.data.begin() + 300 * b);
                            y.data[b] = ex.y;
                        }
                        Var pred = rnn_step(t, net, spec, t.leaf(x), h);
                        Var l = nn::huber_loss(t, pred, t.leaf(y), cfg.huber_delta);
                        loss_sum = loss_sum.id < 0 ? l : nn::add(t, loss_sum, l);
                    }
                    Var loss = nn::scale(t, loss_sum, 1.0 / static_cast<double>(seg_end - seg));
                    const double value = t.value(loss).data[0];
                    t.backward(loss);
                    std::vector<Tensor> grads;
                    grads.reserve(weights.size());
                    for (Var v : net.vars()) grads.push_back(t.grad(v));
                    nn::adam_step(weights, grads, adam);
                    for (std::size_t l = 0; l < state.size(); ++l) state[l] = t.value(h[l]);
                    loss_acc += value * static_cast<double>(seg_end - seg);
                    loss_weight += static_cast<double>(seg_end - seg);
                }
            }
        } else {
            std::vector<std::size_t> order(train_eps.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle_indices(order, rng);
            for (std::size_t oi : order) {
                const auto& examples = train_eps[oi]->examples;
                Tape t;
                Net net(t, names, weights);
                Tensor tokens({examples.size(), 300});
                Tensor y({examples.size(), 1});
                for (std::size_t i = 0; i < examples.size(); ++i) {
                    std::copy(examples[i].x.begin(), examples[i].x.end(),
                              tokens.data.begin() + 300 * i);
                    y.data[i] = examples[i].y;
                }
                Var pred = transformer_forward(t, net, spec, t.leaf(tokens));
                Var loss = nn::huber_loss(t, pred, t.leaf(y), cfg.huber_delta);
                const double value = t.value(loss).data[0];
                t.backward(loss);
                std::vector<Tensor> grads;
                grads.reserve(weights.size());
                for (Var v : net.vars()) grads.push_back(t.grad(v));
                nn::adam_step(weights, grads, adam);
                loss_acc += value * static_cast<double>(examples.size());
                loss_weight += static_cast<double>(examples.size());
            }
        }

        const double val_mae = dataset_mae(spec, names, weights, dataset, result.split.val);
        result.history.push_back({epoch, loss_acc / std::max(1.0, loss_weight), val_mae});
        if (val_mae < best_val - 1e-12) {
            best_val = val_mae;
            best_weights = weights;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }

    result.best.spec = spec;
    for (std::size_t i = 0; i < names.size(); ++i)
        result.best.params.emplace_back(names[i], best_weights[i]);
    result.best_val_mae = best_val;
    return result;
}

nn::Var loss_graph(Tape& tape, const ModelSpec& spec, std::span<const std::string> names,
                   std::span<const Var> params, const Tensor& inputs, const Tensor& targets,
                   double huber_delta) {
    require(inputs.shape.size() == 2 && inputs.shape[1] == static_cast<std::size_t>(spec.input),
            ErrorCode::ShapeMismatch, "loss_graph: inputs must be [Bxinput]");
    Net net(names, params);
    if (spec.kind == ModelKind::Fcn) {
        Var pred = fcn_forward(tape, net, spec, tape.leaf(inputs));
        return nn::huber_loss(tape, pred, tape.leaf(targets), huber_delta);
    }
    if (spec.kind == ModelKind::Transformer) {
        Var pred = transformer_forward(tape, net, spec, tape.leaf(inputs));
        return nn::huber_loss(tape, pred, tape.leaf(targets), huber_delta);
    }
    const std::size_t steps = inputs.shape[0];
    std::vector<Var> h;
    for (int l = 0; l < spec.layers; ++l)
        h.push_back(tape.leaf(Tensor({1, static_cast<std::size_t>(spec.hidden)})));
    Var loss_sum{-1};
    for (std::size_t s = 0; s < steps; ++s) {
        Tensor x({1, inputs.shape[1]});
        std::copy(inputs.data.begin() + static_cast<long>(s * inputs.shape[1]),
                  inputs.data.begin() + static_cast<long>((s + 1) * inputs.shape[1]),
                  x.data.begin());
        Tensor y({1, 1});
        y.data[0] = targets.data[s];
        Var pred = rnn_step(tape, net, spec, tape.leaf(x), h);
        Var l = nn::huber_loss(tape, pred, tape.leaf(y), huber_delta);
        loss_sum = loss_sum.id < 0 ? l : nn::add(tape, loss_sum, l);
    }
    return nn::scale(tape, loss_sum, 1.0 / static_cast<double>(steps));
}

double evaluate_mae(const ModelParams& model, const prep::WindowedDataset& dataset) {
    require(!dataset.empty(), ErrorCode::EmptyDataset, "evaluate_mae: empty dataset");
    const auto names = param_names(model);
    const auto weights = param_values(model);
    std::vector<int> ids(dataset.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return dataset_mae(model.spec, names, weights, dataset, ids);
}

namespace {
constexpr char kModelMagic[8] = {'C', 'F', 'S', 'M', 'D', 'L', '0', '1'};
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
    nlohmann::json header{{"format", "cfs-model-1"},
                          {"kind", kind_name(model.spec.kind)},
                          {"layers", model.spec.layers},
                          {"hidden", model.spec.hidden},
                          {"heads", model.spec.heads},
                          {"input", model.spec.input}};
    const std::string hj = header.dump();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    os.write(kModelMagic, sizeof(kModelMagic));
    const auto len = static_cast<std::uint32_t>(hj.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(hj.data(), static_cast<std::streamsize>(hj.size()));
    nn::write_tensors(os, model.params);
    if (!os) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::MissingFile, "missing checkpoint " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw Error(ErrorCode::ParseError, path.string() + ": not a model checkpoint");
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string hj(len, '\0');
    is.read(hj.data(), len);
    if (!is) throw Error(ErrorCode::ParseError, path.string() + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hj);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    ModelParams mp;
    mp.spec.kind = kind_from_name(header.at("kind").get<std::string>());
    mp.spec.layers = header.at("layers").get<int>();
    mp.spec.hidden = header.at("hidden").get<int>();
    mp.spec.heads = header.at("heads").get<int>();
    mp.spec.input = header.at("input").get<int>();
    mp.params = nn::read_tensors(is);
    validate_spec(mp.spec);
    return mp;
}

}  // namespace cfs::models
