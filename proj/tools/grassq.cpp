// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// grassq: command line front end for codebooks, classifier training,
// stage tables, sweeps and constant calibration.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "grassq/classifier.hpp"
#include "grassq/codebook.hpp"
#include "grassq/config.hpp"
#include "grassq/distortion.hpp"
#include "grassq/errors.hpp"
#include "grassq/harness.hpp"

namespace fs = std::filesystem;
using namespace grassq;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output_dir;
    std::size_t threads = 0;
};

fs::path output_dir(const Globals& g)
{
    if (!g.output_dir.empty()) return g.output_dir;
    if (const char* env = std::getenv("GRASSQ_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

fs::path resolve(const Globals& g, const std::string& name)
{
    const fs::path p(name);
    return p.is_absolute() ? p : output_dir(g) / p;
}

std::optional<ExperimentConfig> maybe_config(const Globals& g)
{
    if (g.config.empty()) return std::nullopt;
    ExperimentConfig c = load_config(g.config);
    if (g.seed) c.seed = *g.seed;
    if (g.threads) c.threads = g.threads;
    return c;
}

// --- codebook build -------------------------------------------------------

struct CodebookArgs {
    std::string kind = "ladder";
    Index n = 0, m = 0;
    int bits = 0;
    std::uint64_t codebook_seed = 1;
    std::string out;
};

int cmd_codebook_build(const Globals& g, const CodebookArgs& a)
{
    Index n = a.n, m = a.m;
    int bits = a.bits;
    std::uint64_t seed = a.codebook_seed;
    std::string kind = a.kind;
    if (auto c = maybe_config(g)) {
        if (!n) n = c->n;
        if (!m) m = c->m;
        if (!bits) bits = c->bits;
        seed = c->codebook_seed;
        if (!c->is_multistage()) kind = "flat";
    }
    if (n < 1 || m < 1 || bits < 1) throw ConfigError("codebook build needs --n, --m and --bits (or --config)");
    const fs::path out = resolve(g, a.out.empty() ? kind + "_" + std::to_string(n) + "x" + std::to_string(m) + "_b" +
                                                        std::to_string(bits) + ".grqc"
                                                  : a.out);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    if (kind == "flat") {
        save_codebook(out, build_flat_codebook(n, m, bits, seed));
    } else if (kind == "ladder") {
        save_codebook(out, build_ladder(n, m, bits, seed));
    } else {
        throw ConfigError("unknown codebook kind '" + kind + "' (expected flat or ladder)");
    }
    std::cout << out.string() << '\n';
    return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
    Index n = 0, m = 0;
    int bits = 0;
    std::uint64_t codebook_seed = 1;
    std::string networks;
    LadderTrainingOptions options;
    std::optional<std::size_t> stage;
};

int cmd_train(const Globals& g, TrainArgs a)
{
    if (auto c = maybe_config(g)) {
        if (!a.n) a.n = c->n;
        if (!a.m) a.m = c->m;
        if (!a.bits) a.bits = c->bits;
        a.codebook_seed = c->codebook_seed;
        if (a.networks.empty()) a.networks = c->networks;
    }
    if (g.seed) a.options.seed = *g.seed;
    if (a.n < 1 || a.m < 1 || a.bits < 1) throw ConfigError("train needs --n, --m and --bits (or --config)");
    if (a.networks.empty()) a.networks = "networks";
    const CodebookLadder ladder = build_ladder(a.n, a.m, a.bits, a.codebook_seed);
    const fs::path dir = resolve(g, a.networks);
    fs::create_directories(dir);

    std::vector<TrainingReport> reports;
    const std::vector<StageNetwork> nets = train_ladder(ladder, a.options, &reports, std::max<std::size_t>(1, g.threads));
    for (std::size_t i = 0; i < nets.size(); ++i) {
        save_network(dir / network_file_name(i), nets[i]);
        std::ofstream report(dir / (network_file_name(i) + ".report"));
        write_training_report(report, reports[i]);
        std::printf("stage=%zu input_dim=%ld val_acc=%.4f\n", i + 1, static_cast<long>(ladder.stages[i].input_dim),
                    reports[i].best_validation_accuracy);
    }
    return 0;
}

// --- eval-stages ----------------------------------------------------------

struct EvalArgs {
    Index n = 0, m = 0;
    int bits = 0;
    std::uint64_t codebook_seed = 1;
    std::size_t samples = 10000;
    std::string networks;
    std::string out;
    bool plotdata = false;
};

int cmd_eval_stages(const Globals& g, EvalArgs a)
{
    StageTableOptions opts;
    opts.samples = a.samples;
    std::uint64_t hash = 0;
    if (auto c = maybe_config(g)) {
        if (c->is_sweep()) throw ConfigError("eval-stages needs a stage_table or classifier_eval config");
        a.n = c->n;
        a.m = c->m;
        a.bits = c->bits;
        a.codebook_seed = c->codebook_seed;
        opts.samples = c->samples;
        opts.seed = c->seed;
        opts.calibration_samples = c->calibration_samples;
        if (c->classifier || c->scenario == Scenario::classifier_eval) a.networks = c->networks;
        if (a.out.empty()) a.out = c->output;
        hash = c->hash();
    } else if (g.seed) {
        opts.seed = *g.seed;
    }
    if (a.n <= a.m || a.m < 1 || a.bits < 1) throw ConfigError("eval-stages needs n > m >= 1 and bits >= 1");
    opts.threads = g.threads;
    opts.codebook_seed = a.codebook_seed;
    const CodebookLadder ladder = build_ladder(a.n, a.m, a.bits, a.codebook_seed);
    std::optional<NetworkSelector> selector;
    if (!a.networks.empty()) selector.emplace(load_network_selector(resolve(g, a.networks), ladder));
    StageTable table = run_stage_table(ladder, opts, selector ? &*selector : nullptr);
    table.config_hash = hash;

    const fs::path out = resolve(g, a.out.empty() ? "stage_table.csv" : a.out);
    emit_csv(out, table);
    if (a.plotdata) emit_plotdata(fs::path(out).replace_extension(".dat"), table);
    std::cout << out.string() << '\n';
    return 0;
}

// --- simulate -------------------------------------------------------------

int cmd_simulate(const Globals& g, bool plotdata)
{
    auto c = maybe_config(g);
    if (!c) throw ConfigError("simulate requires --config");
    if (!c->trace.empty()) c->trace = resolve(g, c->trace).string();
    if (c->classifier) c->networks = resolve(g, c->networks).string();
    const ResultTable table = run_experiment(*c);
    const fs::path out = resolve(g, c->output.empty() ? std::string(to_string(c->scenario)) + ".csv" : c->output);
    emit_csv(out, table);
    if (plotdata) emit_plotdata(fs::path(out).replace_extension(".dat"), table);
    std::cout << out.string() << '\n';
    return 0;
}

// --- calibrate ------------------------------------------------------------

struct CalibrateArgs {
    Index n = 0, m = 0;
    int bits = 0;
    std::size_t samples = 4000;
    bool flat = false;
};

int cmd_calibrate(const Globals& g, CalibrateArgs a)
{
    if (auto c = maybe_config(g)) {
        a.n = c->n;
        a.m = c->m;
        a.bits = c->bits;
        a.samples = c->calibration_samples;
        a.flat = !c->is_multistage();
    }
    if (a.n <= a.m || a.m < 1 || a.bits < 1) throw ConfigError("calibrate needs n > m >= 1 and bits >= 1");
    const std::uint64_t seed = g.seed.value_or(1);
    std::printf("d_prev,d_next,m,probe_bits,constant,standard_error,mean_distortion,wide_interval\n");
    if (a.flat) {
        CounterRng rng(seed);
        const int probe = std::min(a.bits, 14);
        const Calibration cal = calibrate_constant(a.n, a.m, a.m, probe, a.samples, rng);
        std::printf("%ld,%ld,%ld,%d,%.17g,%.17g,%.17g,%d\n", static_cast<long>(a.n), static_cast<long>(a.m),
                    static_cast<long>(a.m), probe, cal.constant, cal.standard_error, cal.mean_distortion,
                    cal.wide_interval ? 1 : 0);
        if (cal.wide_interval) std::fprintf(stderr, "warning: wide calibration interval; increase --samples\n");
        return 0;
    }
    const auto cals = calibrate_ladder(a.n, a.m, a.bits, a.samples, seed);
    bool wide = false;
    for (std::size_t i = 0; i < cals.size(); ++i) {
        const Index d = a.n - static_cast<Index>(i);
        std::printf("%ld,%ld,%ld,%d,%.17g,%.17g,%.17g,%d\n", static_cast<long>(d), static_cast<long>(d - 1),
                    static_cast<long>(a.m), std::min(a.bits, 14), cals[i].constant, cals[i].standard_error,
                    cals[i].mean_distortion, cals[i].wide_interval ? 1 : 0);
        wide = wide || cals[i].wide_interval;
    }
    if (wide) std::fprintf(stderr, "warning: wide calibration interval; increase --samples\n");
    return 0;
}

int report(const std::exception& e, int code)
{
    std::cerr << "error: " << error_class(e) << ": " << e.what() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Recursive Grassmannian quantization simulator", "grassq"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version()));

    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the sampling seed of the config");
    app.add_option("--config", g.config, "Experiment config file (key = value)")->check(CLI::ExistingFile);
    app.add_option("--output-dir", g.output_dir, "Directory for outputs (default $GRASSQ_OUTPUT_DIR or .)");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

    auto* codebook = app.add_subcommand("codebook", "Codebook utilities");
    codebook->require_subcommand(1);
    CodebookArgs cb;
    auto* build = codebook->add_subcommand("build", "Build a codebook and write it to a file");
    build->add_option("--kind", cb.kind, "flat or ladder")->check(CLI::IsMember({"flat", "ladder"}));
    build->add_option("--n", cb.n, "Ambient dimension");
    build->add_option("--m", cb.m, "Subspace dimension");
    build->add_option("--bits", cb.bits, "Total bits (flat) or bits per stage (ladder)");
    build->add_option("--codebook-seed", cb.codebook_seed, "Codebook seed");
    build->add_option("--out", cb.out, "Output file");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train one classifier per ladder stage");
    train_cmd->add_option("--n", tr.n, "Ambient dimension");
    train_cmd->add_option("--m", tr.m, "Subspace dimension");
    train_cmd->add_option("--bits", tr.bits, "Bits per stage");
    train_cmd->add_option("--codebook-seed", tr.codebook_seed, "Ladder seed the networks bind to");
    train_cmd->add_option("--networks", tr.networks, "Directory for stage_XX.net files");
    train_cmd->add_option("--samples-per-class", tr.options.samples_per_class, "Training samples per codebook entry");
    train_cmd->add_option("--epochs", tr.options.training.epochs, "Training epochs");
    train_cmd->add_option("--batch", tr.options.training.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", tr.options.training.learning_rate, "Initial step size");
    train_cmd->add_option("--lr-decay", tr.options.training.learning_rate_decay, "Step size factor per epoch");
    train_cmd->add_option("--dropout", tr.options.dropout_rate, "Hidden-layer dropout rate")->check(CLI::Range(0.0, 0.95));
    train_cmd->add_option("--validation", tr.options.training.validation_fraction, "Validation fraction");
    std::string optimizer = "adam";
    train_cmd->add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval-stages", "Per-stage distortion table, exhaustive and classifier");
    eval->add_option("--n", ev.n, "Ambient dimension");
    eval->add_option("--m", ev.m, "Subspace dimension");
    eval->add_option("--bits", ev.bits, "Bits per stage");
    eval->add_option("--codebook-seed", ev.codebook_seed, "Ladder seed");
    eval->add_option("--samples", ev.samples, "Isotropic inputs");
    eval->add_option("--networks", ev.networks, "Network directory; enables the classifier column");
    eval->add_option("--out", ev.out, "Output CSV");
    eval->add_flag("--plotdata", ev.plotdata, "Also write gnuplot blocks next to the CSV");

    bool sim_plot = false;
    auto* simulate = app.add_subcommand("simulate", "Run a Doppler sweep from a config");
    simulate->add_flag("--plotdata", sim_plot, "Also write gnuplot blocks next to the CSV");

    CalibrateArgs ca;
    auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo distortion constants");
    calibrate->add_option("--n", ca.n, "Ambient dimension");
    calibrate->add_option("--m", ca.m, "Subspace dimension");
    calibrate->add_option("--bits", ca.bits, "Bits per stage (or total with --flat)");
    calibrate->add_option("--samples", ca.samples, "Inputs per constant");
    calibrate->add_flag("--flat", ca.flat, "Single-stage constant instead of the ladder");

    for (auto* sub : {codebook, build, train_cmd, eval, simulate, calibrate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return kExitUsage;
    }
    if (*seed_opt) g.seed = seed_value;
    tr.options.training.optimizer = optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;

    try {
        if (*build) return cmd_codebook_build(g, cb);
        if (*train_cmd) return cmd_train(g, tr);
        if (*eval) return cmd_eval_stages(g, ev);
        if (*simulate) return cmd_simulate(g, sim_plot);
        if (*calibrate) return cmd_calibrate(g, ca);
    } catch (const std::invalid_argument& e) {
        return report(e, kExitUsage);
    } catch (const std::exception& e) {
        return report(e, kExitFailure);
    }
    return kExitUsage;
}
