// The three force estimators (FCN, stacked-GRU, causal transformer decoder),
// their training loop (Huber + Adam, episode-level splits, best-checkpoint
// on validation MAE) and checkpoint persistence.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfs/nn.hpp"
#include "cfs/preprocess.hpp"

namespace cfs::models {

enum class ModelKind { Fcn, Rnn, Transformer };

std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);  // throws InvalidSpec

struct ModelSpec {
    ModelKind kind = ModelKind::Fcn;
    int layers = 2;
    int hidden = 64;
    int heads = 0;  // transformer only; 0 resolves to 12 if divisible, else 8, 4, 2, 1
    int input = 300;
};

/// Explicit head counts must divide `hidden` (throws InvalidSpec); 0 picks
/// the largest of {12, 8, 4, 2, 1} that does.
int resolve_heads(int hidden, int heads);
void validate_spec(const ModelSpec& spec);

struct ModelParams {
    ModelSpec spec;
    std::vector<std::pair<std::string, nn::Tensor>> params;

    const nn::Tensor& tensor(const std::string& name) const;
    std::size_t param_count() const;
};

/// Initializes every tensor uniform in +-1/sqrt(fan_in), deterministically
/// in `seed`.
ModelParams build_model(const ModelSpec& spec, std::uint64_t seed);

/// FCN only: one forward pass on a flattened 100x3 window. The leaky-ReLU
/// output activation can leak small negatives; they are reported as-is.
double predict_instant(const ModelParams& model, std::span<const double> window);

/// RNN/Transformer only: causal per-window predictions over an episode.
std::vector<double> predict_sequence(const ModelParams& model,
                                     const std::vector<WindowedExample>& windows);

/// Stateful single-window stepper used by streaming inference and latency
/// measurement. Works for all three kinds (FCN steps are stateless).
class SequenceRunner {
public:
    explicit SequenceRunner(const ModelParams& model);
    double step(std::span<const double> window);
    void reset();

private:
    const ModelParams& model_;
    std::vector<nn::Tensor> hidden_;             // rnn: per-layer state
    std::vector<std::vector<double>> history_;   // transformer: past windows
};

struct TrainConfig {
    double lr = 1e-3;
    double huber_delta = 1.0;  // grams
    int batch = 256;           // windows per FCN step
    int max_epochs = 200;
    int patience = 20;         // epochs without val-MAE improvement
    std::uint64_t split_seed = 7;
    double train_frac = 0.70;
    double val_frac = 0.15;
    std::uint64_t shuffle_seed = 99;
    int bptt = 100;      // GRU truncation length, in windows
    int seq_batch = 4;   // episodes advanced together per GRU step
};

/// 1e-3, except the hard-to-optimize deep cells (8-layer RNN and
/// 4+-layer transformer) which use 1e-5.
double default_lr(const ModelSpec& spec);

struct Split {
    std::vector<int> train, val, test;  // indices into the dataset vector
};

/// Deterministic episode-level split. Train always gets at least one
/// episode; if the validation share rounds to zero the training episodes
/// double as the validation set (tiny-dataset fallback).
Split split_episodes(std::size_t count, std::uint64_t seed, double train_frac, double val_frac);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
};

struct TrainResult {
    ModelParams best;
    std::vector<EpochStats> history;
    double best_val_mae = 0.0;
    Split split;
};

/// Deterministic given (init, cfg); returns the best-validation checkpoint.
/// Throws EmptyDataset when no training episodes exist.
TrainResult train(const ModelParams& init, const prep::WindowedDataset& dataset,
                  const TrainConfig& cfg);

/// Builds the full training-loss graph (forward + Huber) for one batch of
/// windows on an existing tape, with parameters supplied as leased vars in
/// `names` order. FCN treats `inputs` [Bx300] as a batch; sequence models
/// treat it as an episode of B consecutive windows. Exposed so gradient
/// checks can differentiate entire models.
nn::Var loss_graph(nn::Tape& tape, const ModelSpec& spec, std::span<const std::string> names,
                   std::span<const nn::Var> params, const nn::Tensor& inputs,
                   const nn::Tensor& targets, double huber_delta);

/// Mean |pred - target| in grams over the given episodes; sequence models
/// run causally per episode.
double evaluate_mae(const ModelParams& model, const prep::WindowedDataset& dataset);

// Checkpoints: "CFSMDL01" magic, little-endian u32 JSON header length, JSON
// architecture descriptor, then the nn named-tensor block.
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace cfs::models
