#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aog/dataset.hpp"
#include "aog/grid_grammar.hpp"
#include "aog/parsing.hpp"
#include "aog/score_maps.hpp"

namespace aog {

struct TrainConfig {
    int folding_epochs = 1;
    int unfolding_epochs = 10;
    double lr = 0.0005;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    int batch_size = 1;
    GradientMode gradient_mode = GradientMode::Exact;
    int log_every = 0; // batches between progress callbacks; 0 disables
    double init_stddev = 0.01;

    void validate() const;
};

TrainConfig train_config_from_key_values(const std::map<std::string, std::string>& kv, TrainConfig base = {});
std::string describe(const TrainConfig& cfg);

/// Terminal conv head bound to an AOG.
struct Model {
    Aog aog;
    TerminalConvParams<double> params;

    int classes() const { return static_cast<int>(params.classes()); }
    int channels() const { return static_cast<int>(params.channels()); }
    friend bool operator==(const Model&, const Model&) = default;
};

Model make_model(const Aog& aog, int channels, int classes, std::uint64_t seed, double stddev = 0.01);

struct EpochRecord {
    int epoch = 0;
    Mode mode = Mode::Folding;
    double loss = 0.0;     // mean training loss over the epoch
    double accuracy = 0.0; // training accuracy over the epoch
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::string to_csv() const;
};

struct SoftmaxXent {
    double loss = 0.0;
    Vector<double> grad;
};

/// Cross-entropy of softmax(scores) against label, with its gradient
/// softmax - onehot.
SoftmaxXent softmax_xent(const Vector<double>& scores, int label);

/// Loss for one RoI through conv, pooling, the AOG and softmax. When grad is
/// given the parameter gradient is accumulated into it.
struct RoiPass {
    double loss = 0.0;
    ForwardState<double> state;
};
RoiPass roi_loss(const Model& model, const Sample& sample, std::size_t roi_index, Mode mode,
                 GradientMode gradient_mode = GradientMode::Exact, TerminalConvParams<double>* grad = nullptr);

using ProgressFn = std::function<void(const std::string&)>;

/// Folding epochs then unfolding epochs of SGD with momentum on the
/// per-RoI softmax loss. Deterministic for a given config and dataset.
std::pair<Model, TrainHistory> train(Model model, const Dataset& data, const TrainConfig& cfg,
                                     const ProgressFn& progress = {});

struct Prediction {
    std::size_t sample = 0;
    std::size_t roi = 0;
    int label = -1;
    int predicted = 0;
    double loss = 0.0; // NaN when the RoI is unlabeled
    Vector<double> scores;
    std::optional<ParseTree> tree;              // unfolding only
    std::optional<Configuration> configuration; // unfolding only
};

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::size_t labeled = 0;
    std::vector<Prediction> predictions;
};

/// Classifies every RoI by the argmax of its normalized root score. In
/// unfolding mode the predicted class's parse tree and layout are attached.
/// `jobs` > 1 splits RoIs across threads; results do not depend on it.
EvalResult evaluate(const Model& model, const Dataset& data, Mode mode, int jobs = 1);

struct InterpretationReport {
    double recovered = 0.0;     // mean config_match on correctly classified RoIs with ground truth
    double random_baseline = 0.0;
    std::size_t matched_rois = 0;
    std::size_t baseline_trees = 0;
};

/// Compares layouts recovered by unfolding evaluation with ground truth, and
/// with uniformly random parse trees of the same AOG.
InterpretationReport interpretation_report(const Model& model, const Dataset& data, const EvalResult& eval,
                                           int baseline_trees = 1000, std::uint64_t seed = 0);

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool argmax_stable = true;
    Eigen::Index checks = 0;
};

/// Loss gradient with respect to all parameters vs central differences.
/// For unfolding, also reports whether any probe changed an argmax.
GradCheckReport grad_check_end_to_end(const Model& model, const Sample& sample, std::size_t roi_index, Mode mode,
                                      GradientMode gradient_mode = GradientMode::Exact, double step = 1e-5);

// Checkpoints are JSON with the AOG embedded.
inline constexpr int kModelSchemaVersion = 1;
std::string model_to_json_text(const Model& model);
Model model_from_json_text(const std::string& text);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

} // namespace aog
