#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aog/config_file.hpp"
#include "aog/dataset.hpp"
#include "aog/diagnostics.hpp"
#include "aog/errors.hpp"
#include "aog/grid_grammar.hpp"
#include "aog/synthetic.hpp"
#include "aog/training.hpp"
#include "json.hpp"

namespace aog::cli {

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity_from_env() {
    const char* v = std::getenv("AOG_LOG");
    if (!v) return Verbosity::Info;
    const std::string s(v);
    if (s == "quiet" || s == "error" || s == "0") return Verbosity::Quiet;
    if (s == "debug" || s == "2") return Verbosity::Debug;
    return Verbosity::Info;
}

struct Logger {
    std::ostream& err;
    Verbosity level;
    void info(const std::string& m) const {
        if (level != Verbosity::Quiet) err << m << "\n";
    }
    void debug(const std::string& m) const {
        if (level == Verbosity::Debug) err << m << "\n";
    }
};

struct GridFlags {
    std::string grid = "3x3";
    int lmin = 1;
    double super_threshold = 0.5;
    bool no_super_or = false;
    std::string aog_path;

    void add_to(CLI::App* sub, bool allow_file) {
        sub->add_option("--grid", grid, "Grid size WxH")->capture_default_str();
        sub->add_option("--lmin", lmin, "Minimum side length of a sub-grid")->capture_default_str();
        sub->add_option("--super-threshold", super_threshold, "Area fraction for SuperOr membership")
            ->capture_default_str();
        sub->add_flag("--no-super-or", no_super_or, "Root the graph at the whole-grid OR node");
        if (allow_file) sub->add_option("--aog", aog_path, "Read the AOG from a JSON file instead of building it");
    }

    AogParams params() const {
        const auto [w, h] = parse_grid(grid);
        return AogParams{w, h, lmin, super_threshold, !no_super_or};
    }

    Aog resolve(const Logger& log) const {
        Aog g = [&] {
            if (!aog_path.empty()) {
                log.info("config: aog=" + aog_path);
                return load_aog(aog_path);
            }
            const auto p = params();
            std::ostringstream s;
            s << "config: grid=" << p.grid_w << "x" << p.grid_h << " lmin=" << p.l_min
              << " super_threshold=" << p.super_or_threshold << " super_or=" << (p.super_or ? "on" : "off");
            log.info(s.str());
            return build_aog(p);
        }();
        log.debug("aog: " + std::to_string(g.size()) + " nodes, " + std::to_string(g.num_edges()) + " edges");
        return g;
    }
};

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw InputError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for reading");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string configuration_json(const Configuration& c) {
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& r : c.rects) rects.push_back({r.x, r.y, r.w, r.h});
    return rects.dump();
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    const Logger log{err, verbosity_from_env()};

    CLI::App app{"AND-OR graph grid grammar, parsing operator and toy detection head"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    // build
    GridFlags build_grid;
    std::string build_out;
    auto* build = app.add_subcommand("build", "Build the AOG and write it as JSON");
    build_grid.add_to(build, false);
    build->add_option("--out", build_out, "Output path (stdout when omitted)");

    // stats
    GridFlags stats_grid;
    auto* stats = app.add_subcommand("stats", "Node and edge counts by kind");
    stats_grid.add_to(stats, true);

    // count
    GridFlags count_grid;
    int count_node = -1;
    bool count_at_root = false;
    auto* count = app.add_subcommand("count", "Number of parse trees at the whole-grid node");
    count_grid.add_to(count, true);
    count->add_option("--node", count_node, "Count at this node id instead");
    count->add_flag("--at-root", count_at_root, "Count at the root, including SuperOr alternatives");

    // render
    GridFlags render_grid;
    std::string render_tree, render_out;
    auto* render = app.add_subcommand("render", "Render the AOG as Graphviz DOT");
    render_grid.add_to(render, true);
    render->add_option("--tree", render_tree, "Parse tree JSON to highlight");
    render->add_option("--out", render_out, "Output path (stdout when omitted)");

    // gen
    std::string gen_spec, gen_out;
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    auto* gen = app.add_subcommand("gen", "Generate the synthetic train/test datasets");
    gen->add_option("--spec,--config", gen_spec, "Synthetic spec file (key = value)");
    gen->add_option("--seed", gen_seed, "Seed (overrides the spec file)")->each([&](const std::string&) { gen_seed_set = true; });
    gen->add_option("--out", gen_out, "Output prefix; writes <prefix>.train.bin and <prefix>.test.bin")->required();

    // train
    GridFlags train_grid;
    std::string train_data, train_config, train_out, train_history, train_gmode;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    auto* trn = app.add_subcommand("train", "Folding-unfolding training of the terminal heads");
    train_grid.grid.clear();
    train_grid.add_to(trn, false);
    trn->add_option("--data", train_data, "Training dataset")->required();
    trn->add_option("--config", train_config, "Training config file (key = value)");
    trn->add_option("--seed", train_seed, "Seed (overrides the config file)")->each([&](const std::string&) { train_seed_set = true; });
    trn->add_option("--gradient-mode", train_gmode, "exact or paper")->check(CLI::IsMember({"exact", "paper"}));
    trn->add_option("--out", train_out, "Checkpoint path")->required();
    trn->add_option("--history", train_history, "History CSV path (default <out>.history.csv)");

    // eval
    std::string eval_model, eval_data, eval_mode = "unfolding", eval_out;
    int eval_jobs = 1, eval_baseline = 1000;
    std::uint64_t eval_seed = 0;
    auto* evl = app.add_subcommand("eval", "Accuracy, loss and layout recovery on a dataset");
    evl->add_option("--model", eval_model, "Checkpoint")->required();
    evl->add_option("--data", eval_data, "Dataset")->required();
    evl->add_option("--mode", eval_mode, "folding or unfolding")->check(CLI::IsMember({"folding", "unfolding"}))->capture_default_str();
    evl->add_option("--jobs", eval_jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    evl->add_option("--baseline-trees", eval_baseline, "Random parse trees for the baseline")->capture_default_str();
    evl->add_option("--seed", eval_seed, "Seed of the random-tree baseline")->capture_default_str();
    evl->add_option("--out", eval_out, "Metrics JSON path (stdout when omitted)");

    // parse
    std::string parse_model, parse_data, parse_out;
    std::size_t parse_sample = 0;
    auto* prs = app.add_subcommand("parse", "Best parse tree per RoI of one sample");
    prs->add_option("--model", parse_model, "Checkpoint")->required();
    prs->add_option("--data", parse_data, "Dataset")->required();
    prs->add_option("--sample", parse_sample, "Sample index")->capture_default_str();
    prs->add_option("--out", parse_out, "Output prefix; writes <prefix>.roi<k>.json and .dot (stdout JSON lines when omitted)");

    // gradcheck
    GridFlags gc_grid;
    gc_grid.grid = "2x2";
    std::string gc_mode = "folding", gc_gmode = "exact";
    std::uint64_t gc_seed = 0;
    double gc_step = 1e-5;
    auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
    gc->add_option("--grid", gc_grid.grid, "Grid size WxH")->capture_default_str();
    gc->add_option("--lmin", gc_grid.lmin, "Minimum side length")->capture_default_str();
    gc->add_option("--mode", gc_mode, "folding or unfolding")->check(CLI::IsMember({"folding", "unfolding"}))->capture_default_str();
    gc->add_option("--gradient-mode", gc_gmode, "exact or paper")->check(CLI::IsMember({"exact", "paper"}))->capture_default_str();
    gc->add_option("--seed", gc_seed, "Seed")->capture_default_str();
    gc->add_option("--step", gc_step, "Finite difference step")->capture_default_str();

    try {
        std::vector<std::string> args(raw_args.rbegin(), raw_args.rend());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (*build) {
            const Aog g = build_grid.resolve(log);
            write_text(build_out, aog_to_json_text(g), out);
        } else if (*stats) {
            const Aog g = stats_grid.resolve(log);
            out << "terminals " << g.count(NodeKind::Terminal) << "\n";
            out << "ands " << g.count(NodeKind::And) << "\n";
            out << "ors " << g.count(NodeKind::Or) << "\n";
            out << "super_ors " << g.count(NodeKind::SuperOr) << "\n";
            out << "nodes " << g.size() << "\n";
            out << "edges " << g.num_edges() << "\n";
            out << "root_children " << g.node(g.root_id()).children.size() << "\n";
        } else if (*count) {
            const Aog g = count_grid.resolve(log);
            NodeId at = g.full_grid_id();
            if (count_at_root) at = g.root_id();
            if (count_node >= 0) at = count_node;
            out << count_parse_trees(g, at) << "\n";
        } else if (*render) {
            const Aog g = render_grid.resolve(log);
            if (render_tree.empty()) {
                write_text(render_out, to_dot(g), out);
            } else {
                const ParseTree t = parse_tree_from_json_text(g, read_text(render_tree));
                write_text(render_out, to_dot(g, &t), out);
            }
        } else if (*gen) {
            SyntheticSpec spec;
            if (!gen_spec.empty()) spec = synthetic_spec_from_key_values(load_key_values(gen_spec));
            if (gen_seed_set) spec.seed = gen_seed;
            log.info("config: " + describe(spec));
            const auto split = generate_split(spec);
            save_dataset(split.train, gen_out + ".train.bin");
            save_dataset(split.test, gen_out + ".test.bin");
            out << "train " << split.train.num_rois() << " rois -> " << gen_out << ".train.bin\n";
            out << "test " << split.test.num_rois() << " rois -> " << gen_out << ".test.bin\n";
        } else if (*trn) {
            TrainConfig cfg;
            if (!train_config.empty()) cfg = train_config_from_key_values(load_key_values(train_config));
            if (train_seed_set) cfg.seed = train_seed;
            if (!train_gmode.empty()) cfg.gradient_mode = gradient_mode_from_string(train_gmode);
            const Dataset data = load_dataset(train_data);
            if (train_grid.grid.empty()) {
                train_grid.grid = std::to_string(data.grid_w) + "x" + std::to_string(data.grid_h);
            }
            const Aog g = train_grid.resolve(log);
            if (g.grid_w() != data.grid_w || g.grid_h() != data.grid_h) {
                throw InputError("AOG grid differs from the dataset grid");
            }
            log.info("config: " + describe(cfg));
            const int channels = data.samples.empty() ? 1 : static_cast<int>(data.samples.front().feature.channels());
            Model model = make_model(g, channels, data.num_classes, cfg.seed, cfg.init_stddev);
            auto [trained, history] = train(std::move(model), data, cfg, [&](const std::string& m) { log.info(m); });
            save_model(trained, train_out);
            write_text(train_history.empty() ? train_out + ".history.csv" : train_history, history.to_csv(), out);
            const auto& last = history.epochs.empty() ? EpochRecord{} : history.epochs.back();
            out << "trained " << history.epochs.size() << " epochs; final loss " << last.loss << " accuracy "
                << last.accuracy << "\n";
        } else if (*evl) {
            log.info("config: mode=" + eval_mode + " jobs=" + std::to_string(eval_jobs) +
                     " baseline_trees=" + std::to_string(eval_baseline) + " seed=" + std::to_string(eval_seed));
            const Model model = load_model(eval_model);
            const Dataset data = load_dataset(eval_data);
            const Mode mode = mode_from_string(eval_mode);
            const auto res = evaluate(model, data, mode, eval_jobs);
            nlohmann::json j;
            j["mode"] = eval_mode;
            j["rois"] = res.predictions.size();
            j["labeled"] = res.labeled;
            j["accuracy"] = res.accuracy;
            j["mean_loss"] = res.mean_loss;
            if (mode == Mode::Unfolding) {
                const auto rep = interpretation_report(model, data, res, eval_baseline, eval_seed);
                j["config_match"] = rep.recovered;
                j["config_match_rois"] = rep.matched_rois;
                j["random_tree_baseline"] = rep.random_baseline;
                j["baseline_trees"] = rep.baseline_trees;
            }
            write_text(eval_out, j.dump(2) + "\n", out);
        } else if (*prs) {
            log.info("config: sample=" + std::to_string(parse_sample));
            const Model model = load_model(parse_model);
            const Dataset data = load_dataset(parse_data);
            if (parse_sample >= data.samples.size()) throw LookupError("sample index out of range");
            const Sample& s = data.samples[parse_sample];
            const auto maps = compute_terminal_maps(s.feature, model.params);
            for (std::size_t r = 0; r < s.rois.size(); ++r) {
                const auto state = forward(model.aog, pool_terminals(model.aog, maps, s.rois[r]), Mode::Unfolding);
                int best = 0;
                for (int c = 1; c < state.root.size(); ++c) {
                    if (state.root(c) > state.root(best)) best = c;
                }
                const ParseTree t = extract_parse_tree(model.aog, state, best);
                const std::string tree_json = parse_tree_to_json_text(model.aog, t);
                if (parse_out.empty()) {
                    out << tree_json;
                } else {
                    const std::string stem = parse_out + ".roi" + std::to_string(r);
                    write_text(stem + ".json", tree_json, out);
                    write_text(stem + ".dot", to_dot(model.aog, &t), out);
                    out << "roi " << r << " class " << best << " layout "
                        << configuration_json(collapse_configuration(model.aog, t)) << " -> " << stem << ".{json,dot}\n";
                }
            }
        } else if (*gc) {
            GradCheckSetup setup;
            std::tie(setup.grid_w, setup.grid_h) = parse_grid(gc_grid.grid);
            setup.l_min = gc_grid.lmin;
            setup.step = gc_step;
            log.info("config: grid=" + gc_grid.grid + " lmin=" + std::to_string(gc_grid.lmin) + " mode=" + gc_mode +
                     " gradient_mode=" + gc_gmode + " seed=" + std::to_string(gc_seed));
            const auto suite = run_gradcheck_suite(setup, mode_from_string(gc_mode), gradient_mode_from_string(gc_gmode), gc_seed);
            out << std::setprecision(3) << std::scientific;
            for (const auto& st : suite.stages) {
                out << st.stage << " max_rel_err " << st.max_rel_error << " (" << st.checks << " checks)\n";
            }
            out << "draw_seed " << suite.draw_seed << " argmax_stable " << (suite.argmax_stable ? "yes" : "no") << "\n";
            out << "max_rel_err " << suite.max_rel_error() << "\n";
            if (!(suite.max_rel_error() < 1e-4)) {
                err << "gradcheck: max relative error exceeds 1e-4\n";
                return kNumeric;
            }
        }
    } catch (const ParameterError& e) {
        err << name << ": " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError& e) {
        err << name << ": " << e.what() << "\n";
        return kNumeric;
    } catch (const Error& e) {
        err << name << ": " << e.what() << "\n";
        return kData;
    }
    return kOk;
}

} // namespace aog::cli
