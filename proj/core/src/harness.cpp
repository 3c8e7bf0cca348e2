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

#include "grassq/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "grassq/channel.hpp"
#include "grassq/classifier.hpp"
#include "grassq/errors.hpp"
#include "parallel.hpp"

#ifndef GRASSQ_VERSION
#define GRASSQ_VERSION "unknown"
#endif

namespace grassq {

namespace {

constexpr std::uint64_t kCalibrationStream = 0xCA11B4A7E0000001ULL;
constexpr std::size_t kStageBlock = 256;
constexpr int kFlatProbeLimit = 10;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

// Running sums for a mean and its standard error.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::uint64_t count = 0;

    void add(double x)
    {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    void merge(const Moments& o)
    {
        sum += o.sum;
        sum_sq += o.sum_sq;
        count += o.count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double standard_error() const
    {
        if (count < 2) return 0.0;
        const double c = static_cast<double>(count);
        const double m = sum / c;
        return std::sqrt(std::max(0.0, (sum_sq - c * m * m) / (c - 1.0)) / c);
    }
};

struct TrajectoryStats {
    Moments distortion;
    Moments bits;
    Moments updated;
    std::uint64_t updates = 0;
    std::uint64_t violations = 0;
    std::vector<std::uint64_t> histogram;
    std::string trace;
};

ChannelTrajectory make_channel(const ExperimentConfig& c, double doppler, std::uint64_t seed)
{
    switch (c.channel) {
    case ChannelModel::iid: return generate_iid(c.n, c.m, c.length, seed);
    case ChannelModel::gauss_markov: return generate_gauss_markov(c.n, c.m, c.length, doppler, seed);
    case ChannelModel::clarke_sos: return generate_clarke_sos(c.n, c.m, c.length, doppler, c.sinusoids, seed);
    }
    throw std::invalid_argument("unknown channel model");
}

// Standard error from per-trajectory means; falls back to the per-instant
// estimate when there is only one trajectory.
double trajectory_se(const std::vector<double>& means, const Moments& pooled)
{
    if (means.size() < 2) return pooled.standard_error();
    Moments m;
    for (double x : means) m.add(x);
    return m.standard_error();
}

ResultRow reduce_row(double doppler, const std::vector<TrajectoryStats>& per_traj, std::size_t histogram_size)
{
    ResultRow row;
    row.doppler = doppler;
    row.histogram.assign(histogram_size, 0);
    Moments d, b, u;
    std::vector<double> md, mb, mu;
    std::uint64_t updates = 0;
    for (const auto& t : per_traj) {
        d.merge(t.distortion);
        b.merge(t.bits);
        u.merge(t.updated);
        updates += t.updates;
        row.violations += t.violations;
        for (std::size_t i = 0; i < histogram_size; ++i) row.histogram[i] += t.histogram[i];
        if (t.distortion.count) {
            md.push_back(t.distortion.mean());
            mb.push_back(t.bits.mean());
            mu.push_back(t.updated.mean());
        }
    }
    row.instants = d.count;
    row.mean_distortion = d.mean();
    row.mean_bits = b.mean();
    row.mean_updated = u.mean();
    row.se_distortion = trajectory_se(md, d);
    row.se_bits = trajectory_se(mb, b);
    row.se_updated = trajectory_se(mu, u);
    row.update_fraction = d.count ? static_cast<double>(updates) / static_cast<double>(d.count) : 0.0;
    row.modal_updated = static_cast<std::size_t>(
        std::max_element(row.histogram.begin(), row.histogram.end()) - row.histogram.begin());
    return row;
}

void ensure_parent(const std::filesystem::path& path)
{
    const auto parent = path.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

template <typename Table, typename Writer>
void emit_file(const std::filesystem::path& path, const Table& table, Writer write)
{
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write(out, table);
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace

std::string_view library_version() noexcept { return GRASSQ_VERSION; }

DistortionModel expected_ladder_model(Index n, Index m, int bits_per_stage, std::size_t calibration_samples,
                                      std::uint64_t seed)
{
    if (m == 1) return theory_multi_stage(n, m, bits_per_stage);
    const auto cal = calibrate_ladder(n, m, bits_per_stage, calibration_samples, seed);
    std::vector<double> k;
    k.reserve(cal.size());
    for (const auto& c : cal) k.push_back(c.constant);
    return theory_multi_stage(n, m, bits_per_stage, k);
}

double expected_flat_distortion(Index n, Index m, int bits, std::size_t calibration_samples, std::uint64_t seed)
{
    if (m == 1) return exact_single_stage_m1(n, bits);
    CounterRng rng(seed);
    const Calibration c = calibrate_constant(n, m, m, std::min(bits, kFlatProbeLimit), calibration_samples, rng);
    return theory_single_stage(n, m, bits, c.constant);
}

SubspaceBasis channel_subspace(const ComplexMatrix& h)
{
    if (h.cols() == 1) return SubspaceBasis::from_vector(h.col(0));
    return compact_svd(h).u;
}

ResultTable run_experiment(const ExperimentConfig& config, const StageSelector* selector)
{
    config.validate();
    if (!config.is_sweep())
        throw ConfigError("scenario " + std::string(to_string(config.scenario)) + " is not a Doppler sweep");

    ResultTable table;
    table.config = config;
    table.config_hash = config.hash();
    const std::uint64_t calibration_seed = CounterRng::derive_seed(config.seed, kCalibrationStream);

    std::optional<CodebookLadder> ladder;
    std::optional<FlatCodebook> flat;
    DistortionModel model;
    if (config.is_multistage()) {
        ladder = build_ladder(config.n, config.m, config.bits, config.codebook_seed);
        model = expected_ladder_model(config.n, config.m, config.bits, config.calibration_samples, calibration_seed);
        table.stage_count = ladder->stage_count();
        table.expected_distortion = model.total;
        table.header_bits = config.is_selective() ? feedback_header_bits(table.stage_count) : 0;
    } else {
        flat = build_flat_codebook(config.n, config.m, config.bits, config.codebook_seed);
        table.stage_count = 1;
        table.expected_distortion =
            expected_flat_distortion(config.n, config.m, config.bits, config.calibration_samples, calibration_seed);
        table.header_bits = config.is_selective() ? 1 : 0;
    }

    std::unique_ptr<NetworkSelector> owned;
    const ExhaustiveSelector exhaustive;
    if (!selector) {
        if (config.classifier) {
            owned = std::make_unique<NetworkSelector>(load_network_selector(config.networks, *ladder));
            selector = owned.get();
        } else {
            selector = &exhaustive;
        }
    }

    const std::size_t histogram_size = table.stage_count + 1;
    const std::size_t warmup = config.is_selective() ? config.warmup : 0;
    const double threshold = config.hysteresis.upper * table.expected_distortion;
    const bool want_trace = !config.trace.empty();

    std::vector<double> dopplers = config.dopplers;
    std::vector<std::size_t> order(dopplers.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dopplers[a] < dopplers[b]; });

    std::string trace_text;
    if (want_trace) trace_text = "doppler,trajectory,time,counted,updated_stages,bit_cost,distortion\n";

    for (std::size_t di : order) {
        const double doppler = dopplers[di];
        const std::uint64_t doppler_seed = CounterRng::derive_seed(config.seed, di);
        std::vector<TrajectoryStats> per_traj(config.trajectories);

        detail::parallel_for(config.trajectories, config.threads, [&](std::size_t t) {
            TrajectoryStats& st = per_traj[t];
            st.histogram.assign(histogram_size, 0);
            const ChannelTrajectory channel = make_channel(config, doppler, CounterRng::derive_seed(doppler_seed, t));

            std::optional<QuantizerState> state;
            std::optional<SingleStageState> single;
            if (config.scenario == Scenario::multistage_selective) state.emplace(*ladder, config.hysteresis);
            if (config.scenario == Scenario::single_stage_selective) single.emplace(config.hysteresis.upper);

            for (std::size_t k = 0; k < channel.length(); ++k) {
                const SubspaceBasis u = channel_subspace(channel.matrices[k]);
                std::size_t updated = 0;
                int bits = 0;
                double dist = 0.0;
                switch (config.scenario) {
                case Scenario::single_stage_memoryless: {
                    const SingleStageResult r = quantize_single_stage(u, *flat);
                    updated = 1;
                    bits = flat->bits;
                    dist = r.distortion;
                    break;
                }
                case Scenario::single_stage_selective: {
                    const FeedbackRecord r = single_stage_selective(u, *single, *flat, table.expected_distortion);
                    updated = r.updated_stages;
                    bits = r.bit_cost;
                    dist = r.distortion;
                    break;
                }
                case Scenario::multistage_full: {
                    const MultiStageResult r = recursive_quantize_full(u, *ladder, *selector);
                    updated = ladder->stage_count();
                    bits = ladder->full_update_bits();
                    dist = chordal_distance(u, r.reconstruction);
                    break;
                }
                case Scenario::multistage_selective: {
                    const FeedbackRecord r = recursive_quantize_selective(u, *state, model, *selector);
                    updated = r.updated_stages;
                    bits = r.bit_cost;
                    dist = r.distortion;
                    break;
                }
                default: break;
                }
                const bool counted = k >= warmup;
                if (want_trace) {
                    st.trace += num(doppler) + "," + std::to_string(t) + "," + std::to_string(k) + "," +
                                (counted ? "1," : "0,") + std::to_string(updated) + "," + std::to_string(bits) + "," +
                                num(dist) + "\n";
                }
                if (!counted) continue;
                st.distortion.add(dist);
                st.bits.add(static_cast<double>(bits));
                st.updated.add(static_cast<double>(updated));
                if (updated > 0) ++st.updates;
                if (config.is_selective() && updated == 0 && dist > threshold) ++st.violations;
                ++st.histogram[updated];
            }
        });

        if (want_trace)
            for (const auto& st : per_traj) trace_text += st.trace;
        const std::size_t hist = config.is_multistage() ? histogram_size : 2;
        for (auto& st : per_traj) st.histogram.resize(hist);
        table.rows.push_back(reduce_row(doppler, per_traj, hist));
    }

    if (want_trace) {
        const std::filesystem::path path = config.trace;
        ensure_parent(path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open trace '" + path.string() + "' for writing");
        out << trace_text;
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    }
    return table;
}

StageTable run_stage_table(const CodebookLadder& ladder, const StageTableOptions& options,
                           const StageSelector* classifier)
{
    if (options.samples < 1) throw std::invalid_argument("stage table needs at least one sample");
    const std::size_t stages = ladder.stage_count();
    StageTable table;
    table.n = ladder.n;
    table.m = ladder.m;
    table.bits_per_stage = ladder.bits_per_stage;
    table.samples = options.samples;
    table.seed = options.seed;
    table.codebook_seed = ladder.master_seed;

    const DistortionModel model =
        expected_ladder_model(ladder.n, ladder.m, ladder.bits_per_stage, options.calibration_samples,
                              CounterRng::derive_seed(options.seed, kCalibrationStream));

    struct Block {
        std::vector<Moments> exhaustive, network;
        std::vector<std::uint64_t> agree;
        Moments total_exhaustive, total_network;
    };
    const std::size_t blocks = (options.samples + kStageBlock - 1) / kStageBlock;
    std::vector<Block> partial(blocks);

    detail::parallel_for(blocks, options.threads, [&](std::size_t blk) {
        Block& out = partial[blk];
        out.exhaustive.resize(stages);
        out.network.resize(stages);
        out.agree.assign(stages, 0);
        const std::size_t begin = blk * kStageBlock;
        const std::size_t end = std::min(options.samples, begin + kStageBlock);
        std::vector<SubspaceBasis> chosen(stages);
        for (std::size_t s = begin; s < end; ++s) {
            CounterRng rng(CounterRng::derive_seed(options.seed, s));
            const SubspaceBasis u = random_semiunitary(ladder.n, ladder.m, rng);

            SubspaceBasis b = u;
            for (std::size_t i = 0; i < stages; ++i) {
                StageChoice c = stage_select(b, ladder.stages[i]);
                out.exhaustive[i].add(c.distortion);
                if (i + 1 < stages) b = sqbc(b, c.stage_matrix);
                chosen[i] = std::move(c.stage_matrix);
            }
            out.total_exhaustive.add(chordal_distance(u, compose_stages(chosen)));

            if (!classifier) continue;
            b = u;
            for (std::size_t i = 0; i < stages; ++i) {
                const StageCodebook& sc = ladder.stages[i];
                const std::size_t index = classifier->select(i, b, sc);
                out.network[i].add(stage_distortion(b, sc, index));
                if (stage_select(b, sc).index == index) ++out.agree[i];
                chosen[i] = sc.stage_matrix(index);
                if (i + 1 < stages) b = sqbc(b, chosen[i]);
            }
            out.total_network.add(chordal_distance(u, compose_stages(chosen)));
        }
    });

    std::vector<Moments> exhaustive(stages), network(stages);
    std::vector<std::uint64_t> agree(stages, 0);
    Moments total_exhaustive, total_network;
    for (const Block& blk : partial) {
        for (std::size_t i = 0; i < stages; ++i) {
            exhaustive[i].merge(blk.exhaustive[i]);
            network[i].merge(blk.network[i]);
            agree[i] += blk.agree[i];
        }
        total_exhaustive.merge(blk.total_exhaustive);
        total_network.merge(blk.total_network);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < stages; ++i) {
        StageRow row;
        row.stage = i + 1;
        row.input_dim = ladder.stages[i].input_dim;
        row.theory = model.stage[i];
        row.exhaustive_mean = exhaustive[i].mean();
        row.exhaustive_se = exhaustive[i].standard_error();
        row.has_classifier = classifier != nullptr;
        row.classifier_mean = classifier ? network[i].mean() : nan;
        row.classifier_se = classifier ? network[i].standard_error() : nan;
        row.agreement = classifier ? static_cast<double>(agree[i]) / static_cast<double>(options.samples) : nan;
        table.rows.push_back(row);
    }
    table.theory_total = model.total;
    table.exhaustive_total = total_exhaustive.mean();
    table.exhaustive_total_se = total_exhaustive.standard_error();
    table.classifier_total = classifier ? total_network.mean() : nan;
    table.classifier_total_se = classifier ? total_network.standard_error() : nan;
    return table;
}

const std::vector<std::string>& result_csv_columns()
{
    static const std::vector<std::string> cols = {
        "doppler",        "instants",    "mean_distortion",    "se_distortion",
        "mean_bits",      "se_bits",     "mean_updated_stages", "se_updated_stages",
        "update_fraction", "modal_updated_stages", "violations", "histogram",
    };
    return cols;
}

const std::vector<std::string>& stage_csv_columns()
{
    static const std::vector<std::string> cols = {
        "stage",           "input_dim",     "theory",        "exhaustive_mean",
        "exhaustive_se",   "classifier_mean", "classifier_se", "agreement",
    };
    return cols;
}

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& cols)
{
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

void write_sweep_metadata(std::ostream& out, const ResultTable& t)
{
    const ExperimentConfig& c = t.config;
    out << "# grassq result table\n"
        << "# version=" << library_version() << '\n'
        << "# scenario=" << to_string(c.scenario) << '\n'
        << "# config_hash=" << hex64(t.config_hash) << '\n'
        << "# seed=" << c.seed << '\n'
        << "# codebook_seed=" << c.codebook_seed << '\n'
        << "# n=" << c.n << '\n'
        << "# m=" << c.m << '\n'
        << "# bits=" << c.bits << '\n'
        << "# stages=" << t.stage_count << '\n'
        << "# header_bits=" << t.header_bits << '\n'
        << "# channel=" << to_string(c.channel) << '\n'
        << "# length=" << c.length << '\n'
        << "# trajectories=" << c.trajectories << '\n'
        << "# warmup=" << (c.is_selective() ? c.warmup : 0) << '\n'
        << "# c_u=" << num(c.hysteresis.upper) << '\n'
        << "# c_l=" << num(c.hysteresis.lower) << '\n'
        << "# classifier=" << (c.classifier ? "true" : "false") << '\n'
        << "# expected_distortion=" << num(t.expected_distortion) << '\n';
}

void write_stage_metadata(std::ostream& out, const StageTable& t)
{
    out << "# grassq stage table\n"
        << "# version=" << library_version() << '\n'
        << "# config_hash=" << hex64(t.config_hash) << '\n'
        << "# seed=" << t.seed << '\n'
        << "# codebook_seed=" << t.codebook_seed << '\n'
        << "# n=" << t.n << '\n'
        << "# m=" << t.m << '\n'
        << "# bits=" << t.bits_per_stage << '\n'
        << "# samples=" << t.samples << '\n'
        << "# theory_total=" << num(t.theory_total) << '\n'
        << "# exhaustive_total=" << num(t.exhaustive_total) << '\n'
        << "# exhaustive_total_se=" << num(t.exhaustive_total_se) << '\n'
        << "# classifier_total=" << num(t.classifier_total) << '\n'
        << "# classifier_total_se=" << num(t.classifier_total_se) << '\n';
}

} // namespace

void write_csv(std::ostream& out, const ResultTable& table)
{
    write_sweep_metadata(out, table);
    write_header(out, result_csv_columns());
    for (const ResultRow& r : table.rows) {
        out << num(r.doppler) << ',' << r.instants << ',' << num(r.mean_distortion) << ',' << num(r.se_distortion)
            << ',' << num(r.mean_bits) << ',' << num(r.se_bits) << ',' << num(r.mean_updated) << ','
            << num(r.se_updated) << ',' << num(r.update_fraction) << ',' << r.modal_updated << ',' << r.violations
            << ',';
        for (std::size_t i = 0; i < r.histogram.size(); ++i) out << (i ? ";" : "") << r.histogram[i];
        out << '\n';
    }
}

void write_csv(std::ostream& out, const StageTable& table)
{
    write_stage_metadata(out, table);
    write_header(out, stage_csv_columns());
    for (const StageRow& r : table.rows) {
        out << r.stage << ',' << r.input_dim << ',' << num(r.theory) << ',' << num(r.exhaustive_mean) << ','
            << num(r.exhaustive_se) << ',' << num(r.classifier_mean) << ',' << num(r.classifier_se) << ','
            << num(r.agreement) << '\n';
    }
}

void write_plotdata(std::ostream& out, const ResultTable& table)
{
    write_sweep_metadata(out, table);
    out << "\n# [distortion] doppler mean se\n";
    for (const auto& r : table.rows) out << num(r.doppler) << ' ' << num(r.mean_distortion) << ' ' << num(r.se_distortion) << '\n';
    out << "\n\n# [bits] doppler mean se\n";
    for (const auto& r : table.rows) out << num(r.doppler) << ' ' << num(r.mean_bits) << ' ' << num(r.se_bits) << '\n';
    out << "\n\n# [updated_stages] doppler mean se\n";
    for (const auto& r : table.rows) out << num(r.doppler) << ' ' << num(r.mean_updated) << ' ' << num(r.se_updated) << '\n';
    for (const auto& r : table.rows) {
        out << "\n\n# [histogram doppler=" << num(r.doppler) << "] updated_stages relative_frequency\n";
        for (std::size_t i = 0; i < r.histogram.size(); ++i) {
            const double f = r.instants ? static_cast<double>(r.histogram[i]) / static_cast<double>(r.instants) : 0.0;
            out << i << ' ' << num(f) << '\n';
        }
    }
}

void write_plotdata(std::ostream& out, const StageTable& table)
{
    write_stage_metadata(out, table);
    out << "\n# [theory] input_dim value\n";
    for (const auto& r : table.rows) out << r.input_dim << ' ' << num(r.theory) << '\n';
    out << "\n\n# [exhaustive] input_dim mean se\n";
    for (const auto& r : table.rows) out << r.input_dim << ' ' << num(r.exhaustive_mean) << ' ' << num(r.exhaustive_se) << '\n';
    if (!table.rows.empty() && table.rows.front().has_classifier) {
        out << "\n\n# [classifier] input_dim mean se agreement\n";
        for (const auto& r : table.rows)
            out << r.input_dim << ' ' << num(r.classifier_mean) << ' ' << num(r.classifier_se) << ' '
                << num(r.agreement) << '\n';
    }
}

void emit_csv(const std::filesystem::path& path, const ResultTable& table)
{
    emit_file(path, table, [](std::ostream& o, const ResultTable& t) { write_csv(o, t); });
}

void emit_csv(const std::filesystem::path& path, const StageTable& table)
{
    emit_file(path, table, [](std::ostream& o, const StageTable& t) { write_csv(o, t); });
}

void emit_plotdata(const std::filesystem::path& path, const ResultTable& table)
{
    emit_file(path, table, [](std::ostream& o, const ResultTable& t) { write_plotdata(o, t); });
}

void emit_plotdata(const std::filesystem::path& path, const StageTable& table)
{
    emit_file(path, table, [](std::ostream& o, const StageTable& t) { write_plotdata(o, t); });
}

} // namespace grassq
