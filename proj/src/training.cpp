#include "aog/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "aog/config_file.hpp"
#include "aog/errors.hpp"
#include "aog/gradcheck.hpp"
#include "aog/synthetic.hpp"
#include "json.hpp"

using nlohmann::json;

namespace aog {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("learning rate must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
    if (folding_epochs < 0 || unfolding_epochs < 0) throw ParameterError("epoch counts must be >= 0");
    if (batch_size < 1) throw ParameterError("batch size must be >= 1");
    if (log_every < 0) throw ParameterError("log_every must be >= 0");
    if (!(init_stddev >= 0.0)) throw ParameterError("init_stddev must be >= 0");
}

TrainConfig train_config_from_key_values(const std::map<std::string, std::string>& kv, TrainConfig c) {
    for (const auto& [k, v] : kv) {
        if (k == "folding_epochs") c.folding_epochs = kv_int(k, v);
        else if (k == "unfolding_epochs") c.unfolding_epochs = kv_int(k, v);
        else if (k == "lr") c.lr = kv_double(k, v);
        else if (k == "momentum") c.momentum = kv_double(k, v);
        else if (k == "seed") c.seed = static_cast<std::uint64_t>(kv_int(k, v));
        else if (k == "batch_size") c.batch_size = kv_int(k, v);
        else if (k == "gradient_mode") c.gradient_mode = gradient_mode_from_string(v);
        else if (k == "log_every") c.log_every = kv_int(k, v);
        else if (k == "init_stddev") c.init_stddev = kv_double(k, v);
        else throw ParseError("unknown training config key '" + k + "'");
    }
    return c;
}

std::string describe(const TrainConfig& c) {
    std::ostringstream o;
    o << "folding_epochs=" << c.folding_epochs << " unfolding_epochs=" << c.unfolding_epochs << " lr=" << c.lr
      << " momentum=" << c.momentum << " seed=" << c.seed << " batch_size=" << c.batch_size
      << " gradient_mode=" << to_string(c.gradient_mode) << " log_every=" << c.log_every
      << " init_stddev=" << c.init_stddev;
    return o.str();
}

Model make_model(const Aog& aog, int channels, int classes, std::uint64_t seed, double stddev) {
    return Model{aog, init_params<double>(aog, channels, classes, seed, stddev)};
}

std::string TrainHistory::to_csv() const {
    std::ostringstream o;
    o << std::setprecision(17);
    o << "epoch,mode,loss,accuracy\n";
    for (const auto& e : epochs) o << e.epoch << "," << to_string(e.mode) << "," << e.loss << "," << e.accuracy << "\n";
    return o.str();
}

SoftmaxXent softmax_xent(const Vector<double>& scores, int label) {
    if (label < 0 || label >= scores.size()) {
        throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(scores.size()) + ")");
    }
    if (!scores.allFinite()) throw NumericError("non-finite class scores");
    const double m = scores.maxCoeff();
    const Vector<double> e = (scores.array() - m).exp().matrix();
    const double z = e.sum();
    SoftmaxXent out;
    out.loss = std::log(z) + m - scores(label);
    out.grad = e / z;
    out.grad(label) -= 1.0;
    return out;
}

namespace {

int argmax(const Vector<double>& v) {
    int best = 0;
    for (int c = 1; c < v.size(); ++c) {
        if (v(c) > v(best)) best = c;
    }
    return best;
}

RoiPass roi_pass(const Aog& aog, const TerminalConvParams<double>& params, const Sample& sample,
                 std::size_t roi_index, Mode mode, GradientMode gradient_mode, TerminalConvParams<double>* grad) {
    if (roi_index >= sample.rois.size()) throw LookupError("RoI index out of range");
    const Roi& roi = sample.rois[roi_index];
    if (!roi.label) throw InputError("RoI has no class label");

    const auto maps = compute_terminal_maps(sample.feature, params);
    const auto scores = pool_terminals(aog, maps, roi);
    RoiPass pass;
    pass.state = forward(aog, scores, mode);
    const auto sx = softmax_xent(pass.state.root, *roi.label);
    pass.loss = sx.loss;

    if (grad) {
        BackwardOptions opts;
        opts.gradient_mode = gradient_mode;
        const auto tgrad = backward(aog, pass.state, sx.grad, opts);
        auto grad_maps = TerminalScoreMaps<double>::zeros(aog.num_terminals(), params.classes(), maps.height, maps.width);
        for (std::size_t k = 0; k < aog.num_terminals(); ++k) {
            pool_backward(aog, tgrad[k], roi, aog.terminal_ids()[k], grad_maps);
        }
        conv_backward(grad_maps, sample.feature, params, *grad);
    }
    return pass;
}

} // namespace

RoiPass roi_loss(const Model& model, const Sample& sample, std::size_t roi_index, Mode mode,
                 GradientMode gradient_mode, TerminalConvParams<double>* grad) {
    return roi_pass(model.aog, model.params, sample, roi_index, mode, gradient_mode, grad);
}

std::pair<Model, TrainHistory> train(Model model, const Dataset& data, const TrainConfig& cfg,
                                     const ProgressFn& progress) {
    cfg.validate();
    std::vector<std::pair<std::size_t, std::size_t>> items;
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        for (std::size_t r = 0; r < data.samples[s].rois.size(); ++r) {
            if (!data.samples[s].rois[r].label) throw InputError("training RoIs must be labeled");
            items.emplace_back(s, r);
        }
    }
    if (items.empty()) throw InputError("training dataset is empty");
    if (model.classes() < data.num_classes) throw ShapeError("model has fewer classes than the dataset");

    TrainHistory history;
    std::mt19937_64 rng(cfg.seed);
    auto velocity = model.params.zeros_like();
    const int total = cfg.folding_epochs + cfg.unfolding_epochs;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < total; ++epoch) {
        const Mode mode = epoch < cfg.folding_epochs ? Mode::Folding : Mode::Unfolding;
        std::shuffle(items.begin(), items.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t batches = 0;

        for (std::size_t b = 0; b < items.size(); b += batch) {
            const std::size_t end = std::min(items.size(), b + batch);
            auto grad = model.params.zeros_like();
            for (std::size_t k = b; k < end; ++k) {
                const auto& [s, r] = items[k];
                const auto pass = roi_pass(model.aog, model.params, data.samples[s], r, mode, cfg.gradient_mode, &grad);
                if (!std::isfinite(pass.loss)) {
                    throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1));
                }
                loss_sum += pass.loss;
                if (argmax(pass.state.root) == *data.samples[s].rois[r].label) ++correct;
            }
            const double step = cfg.lr / static_cast<double>(end - b);
            for (std::size_t t = 0; t < model.params.num_terminals(); ++t) {
                velocity.weight[t] = cfg.momentum * velocity.weight[t] - step * grad.weight[t];
                velocity.bias[t] = cfg.momentum * velocity.bias[t] - step * grad.bias[t];
                model.params.weight[t] += velocity.weight[t];
                model.params.bias[t] += velocity.bias[t];
            }
            ++batches;
            if (progress && cfg.log_every > 0 && batches % static_cast<std::size_t>(cfg.log_every) == 0) {
                std::ostringstream msg;
                msg << "epoch " << epoch + 1 << " (" << to_string(mode) << ") batch " << batches
                    << " running loss " << loss_sum / static_cast<double>(end);
                progress(msg.str());
            }
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.mode = mode;
        rec.loss = loss_sum / static_cast<double>(items.size());
        rec.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
        if (!std::isfinite(rec.loss)) throw NumericError("non-finite loss in epoch " + std::to_string(rec.epoch));
        history.epochs.push_back(rec);
        if (progress) {
            std::ostringstream msg;
            msg << "epoch " << rec.epoch << " " << to_string(mode) << " loss " << rec.loss << " accuracy "
                << rec.accuracy;
            progress(msg.str());
        }
    }
    return {std::move(model), std::move(history)};
}

EvalResult evaluate(const Model& model, const Dataset& data, Mode mode, int jobs) {
    EvalResult out;
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        for (std::size_t r = 0; r < data.samples[s].rois.size(); ++r) {
            Prediction p;
            p.sample = s;
            p.roi = r;
            out.predictions.push_back(std::move(p));
        }
    }

    auto run_one = [&](Prediction& p) {
        const Sample& sample = data.samples[p.sample];
        const Roi& roi = sample.rois[p.roi];
        const auto maps = compute_terminal_maps(sample.feature, model.params);
        const auto state = forward(model.aog, pool_terminals(model.aog, maps, roi), mode);
        p.scores = state.root;
        p.predicted = argmax(state.root);
        p.label = roi.label.value_or(-1);
        p.loss = roi.label ? softmax_xent(state.root, *roi.label).loss : std::nan("");
        if (mode == Mode::Unfolding) {
            p.tree = extract_parse_tree(model.aog, state, p.predicted);
            p.configuration = collapse_configuration(model.aog, *p.tree);
        }
    };

    const std::size_t n = out.predictions.size();
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (auto& p : out.predictions) run_one(p);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) run_one(out.predictions[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& p : out.predictions) {
        if (p.label < 0) continue;
        ++out.labeled;
        loss_sum += p.loss;
        if (p.predicted == p.label) ++correct;
    }
    if (out.labeled > 0) {
        out.accuracy = static_cast<double>(correct) / static_cast<double>(out.labeled);
        out.mean_loss = loss_sum / static_cast<double>(out.labeled);
    }
    return out;
}

InterpretationReport interpretation_report(const Model& model, const Dataset& data, const EvalResult& eval,
                                           int baseline_trees, std::uint64_t seed) {
    InterpretationReport rep;
    std::vector<const Configuration*> all_truths;
    std::vector<const Configuration*> matched_truths;
    double sum = 0.0;
    for (const auto& p : eval.predictions) {
        const auto& truth = data.samples.at(p.sample).truth.at(p.roi);
        if (!truth) continue;
        all_truths.push_back(&*truth);
        if (p.predicted != p.label || !p.configuration) continue;
        matched_truths.push_back(&*truth);
        sum += config_match(*p.configuration, *truth);
    }
    rep.matched_rois = matched_truths.size();
    if (rep.matched_rois > 0) rep.recovered = sum / static_cast<double>(rep.matched_rois);

    const auto& pool = matched_truths.empty() ? all_truths : matched_truths;
    if (pool.empty() || baseline_trees <= 0) return rep;
    UniformTreeSampler sampler(model.aog);
    std::mt19937_64 rng(seed);
    double base = 0.0;
    for (int k = 0; k < baseline_trees; ++k) {
        const auto cfg = collapse_configuration(model.aog, sampler(rng));
        base += config_match(cfg, *pool[static_cast<std::size_t>(k) % pool.size()]);
    }
    rep.baseline_trees = static_cast<std::size_t>(baseline_trees);
    rep.random_baseline = base / static_cast<double>(baseline_trees);
    return rep;
}

GradCheckReport grad_check_end_to_end(const Model& model, const Sample& sample, std::size_t roi_index, Mode mode,
                                      GradientMode gradient_mode, double step) {
    auto grad = model.params.zeros_like();
    const auto base = roi_pass(model.aog, model.params, sample, roi_index, mode, gradient_mode, &grad);

    GradCheckReport rep;
    const auto base_trees =
        mode == Mode::Unfolding ? best_terminal_sets(model.aog, base.state) : std::vector<std::vector<NodeId>>{};
    TerminalConvParams<double> probe = model.params;
    auto loss_at = [&](const Vector<double>& flat) {
        probe.assign(flat);
        const auto pass = roi_pass(model.aog, probe, sample, roi_index, mode, gradient_mode, nullptr);
        if (mode == Mode::Unfolding && best_terminal_sets(model.aog, pass.state) != base_trees) {
            rep.argmax_stable = false;
        }
        return pass.loss;
    };
    FiniteDiffOptions opts;
    opts.step = step;
    const auto fd = finite_diff_check<double>(loss_at, model.params.flatten(), grad.flatten(), opts);
    rep.max_rel_error = fd.max_rel_error;
    rep.checks = fd.checks;
    return rep;
}

namespace {

json params_to_json(const TerminalConvParams<double>& p) {
    json weights = json::array();
    json biases = json::array();
    for (std::size_t t = 0; t < p.num_terminals(); ++t) {
        const Vector<double> w = p.weight[t].reshaped();
        weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
        biases.push_back(std::vector<double>(p.bias[t].data(), p.bias[t].data() + p.bias[t].size()));
    }
    return json{{"weight", std::move(weights)}, {"bias", std::move(biases)}};
}

} // namespace

std::string model_to_json_text(const Model& model) {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["classes"] = model.classes();
    j["channels"] = model.channels();
    j["aog"] = json::parse(aog_to_json_text(model.aog));
    j["params"] = params_to_json(model.params);
    return j.dump() + "\n";
}

Model model_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed checkpoint JSON at byte " + std::to_string(e.byte));
    }
    if (!j.is_object() || !j.contains("schema_version")) throw ParseError("checkpoint lacks schema_version");
    if (j.at("schema_version") != kModelSchemaVersion) throw VersionError("unsupported checkpoint schema version");
    try {
        Model m;
        m.aog = aog_from_json_text(j.at("aog").dump());
        const int C = j.at("classes").get<int>();
        const int D = j.at("channels").get<int>();
        const auto weights = j.at("params").at("weight").get<std::vector<std::vector<double>>>();
        const auto biases = j.at("params").at("bias").get<std::vector<std::vector<double>>>();
        if (weights.size() != m.aog.num_terminals() || biases.size() != weights.size()) {
            throw ParseError("checkpoint parameter blocks do not match the AOG's terminals");
        }
        m.params = TerminalConvParams<double>::zeros(weights.size(), C, D);
        for (std::size_t t = 0; t < weights.size(); ++t) {
            if (weights[t].size() != static_cast<std::size_t>(C * D) || biases[t].size() != static_cast<std::size_t>(C)) {
                throw ParseError("checkpoint parameter block " + std::to_string(t) + " has the wrong size");
            }
            m.params.weight[t].reshaped() = Eigen::Map<const Vector<double>>(weights[t].data(), C * D);
            m.params.bias[t] = Eigen::Map<const Vector<double>>(biases[t].data(), C);
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << model_to_json_text(model);
    if (!out) throw InputError("failed writing '" + path + "'");
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    std::ostringstream s;
    s << in.rdbuf();
    return model_from_json_text(s.str());
}

} // namespace aog
