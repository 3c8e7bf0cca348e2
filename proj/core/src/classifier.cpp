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

#include "grassq/classifier.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "binary_io.hpp"
#include "grassq/errors.hpp"

namespace grassq {

namespace {

constexpr std::string_view kNetworkMagic{"GRQNET\0\0", 8};
constexpr double kNegligible = 1e-12;

std::complex<double> canonical_phase(const ComplexMatrix& b, Index j)
{
    Index pivot = 0;
    if (std::abs(b(0, j)) < kNegligible) {
        for (Index i = 1; i < b.rows(); ++i)
            if (std::abs(b(i, j)) > std::abs(b(pivot, j))) pivot = i;
    }
    const double mag = std::abs(b(pivot, j));
    if (mag < kNegligible) return {1.0, 0.0};
    return std::conj(b(pivot, j)) / mag;
}

void shuffle(std::vector<std::size_t>& v, CounterRng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void softmax_columns(Eigen::MatrixXd& z)
{
    for (Index k = 0; k < z.cols(); ++k) {
        auto col = z.col(k);
        col.array() -= col.maxCoeff();
        col = col.array().exp().matrix();
        col /= col.sum();
    }
}

std::string describe(const TrainingOptions& o, double dropout)
{
    std::ostringstream s;
    s << "epochs=" << o.epochs << " batch_size=" << o.batch_size << " learning_rate=" << o.learning_rate
      << " learning_rate_decay=" << o.learning_rate_decay << " dropout=" << dropout
      << " optimizer=" << (o.optimizer == Optimizer::adam ? "adam" : "sgd") << " seed=" << o.seed;
    return s.str();
}

struct AdamMoments {
    NetworkGradients first;
    NetworkGradients second;
};

template <typename T>
void adam_step(T& param, T& m1, T& m2, const T& grad, double lr, double c1, double c2)
{
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    m1 = beta1 * m1 + (1.0 - beta1) * grad;
    m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
}

NetworkGradients zero_like(const NetworkParameters& p)
{
    return {Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()), Eigen::VectorXd::Zero(p.b1.size()),
            Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()), Eigen::VectorXd::Zero(p.b2.size())};
}

double accuracy_on(const StageNetwork& net, const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                   const std::vector<std::size_t>& indices, std::size_t limit)
{
    const std::size_t count = std::min(limit, indices.size());
    if (count == 0) return 0.0;
    constexpr std::size_t chunk = 2048;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < count; start += chunk) {
        const std::size_t len = std::min(chunk, count - start);
        Eigen::MatrixXd x(inputs.rows(), static_cast<Index>(len));
        for (std::size_t k = 0; k < len; ++k) x.col(static_cast<Index>(k)) = inputs.col(static_cast<Index>(indices[start + k]));
        const Eigen::MatrixXd z = net.logits(x);
        for (std::size_t k = 0; k < len; ++k) {
            Index arg = 0;
            z.col(static_cast<Index>(k)).maxCoeff(&arg);
            if (arg == labels[indices[start + k]]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(count);
}

} // namespace

Eigen::VectorXd canonicalize(const SubspaceBasis& b)
{
    const ComplexMatrix& mat = b.matrix();
    const Index d = mat.rows();
    const Index m = mat.cols();
    Eigen::VectorXd out(2 * d * m);
    for (Index j = 0; j < m; ++j) {
        const std::complex<double> phase = canonical_phase(mat, j);
        for (Index i = 0; i < d; ++i) {
            const std::complex<double> v = mat(i, j) * phase;
            out(j * d + i) = v.real();
            out(d * m + j * d + i) = v.imag();
        }
        if (std::abs(mat(0, j)) >= kNegligible) out(d * m + j * d) = 0.0;
    }
    return out;
}

StageNetwork::StageNetwork(NetworkBinding binding, std::uint64_t init_seed, double dropout_rate)
    : binding_(binding), dropout_rate_(dropout_rate)
{
    if (binding.input_dim < 2 || binding.m < 1 || binding.m >= binding.input_dim)
        throw std::invalid_argument("network binding needs input_dim > m >= 1");
    if (binding.bits < 1 || binding.bits > kMaxStageBits) throw std::invalid_argument("network binding has invalid bits");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    CounterRng rng(init_seed);
    auto init = [&rng](Index rows, Index cols) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(cols));
        Eigen::MatrixXd w(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
        return w;
    };
    params_.w1 = init(hidden_width(), input_width());
    params_.b1 = Eigen::VectorXd::Zero(hidden_width());
    params_.w2 = init(classes(), hidden_width());
    params_.b2 = Eigen::VectorXd::Zero(classes());
}

Eigen::MatrixXd StageNetwork::logits(const Eigen::MatrixXd& inputs) const
{
    if (inputs.rows() != input_width()) throw std::invalid_argument("network input width mismatch");
    Eigen::MatrixXd hidden = params_.w1 * inputs;
    hidden.colwise() += params_.b1;
    hidden = hidden.cwiseMax(0.0);
    Eigen::MatrixXd z = params_.w2 * hidden;
    z.colwise() += params_.b2;
    return z;
}

Eigen::VectorXd StageNetwork::probabilities(const Eigen::VectorXd& input) const
{
    Eigen::MatrixXd z = logits(input);
    softmax_columns(z);
    return z.col(0);
}

TrainingSet generate_training_set(const StageCodebook& sc, Index m, std::size_t count, CounterRng& rng)
{
    if (m < 1 || m >= sc.input_dim) throw std::invalid_argument("training set needs 1 <= m < d");
    TrainingSet set;
    set.binding = {sc.input_dim, m, sc.bits, sc.seed};
    set.inputs.resize(2 * sc.input_dim * m, static_cast<Index>(count));
    set.labels.resize(count);
    const ExhaustiveSelector exhaustive;
    for (std::size_t s = 0; s < count; ++s) {
        const SubspaceBasis b = random_semiunitary(sc.input_dim, m, rng);
        set.inputs.col(static_cast<Index>(s)) = canonicalize(b);
        set.labels[s] = static_cast<int>(exhaustive.select(0, b, sc));
    }
    return set;
}

double loss_and_gradient(const StageNetwork& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                         NetworkGradients* gradients, const Eigen::MatrixXd* dropout_mask)
{
    const NetworkParameters& p = net.parameters();
    const Index batch = inputs.cols();
    if (static_cast<std::size_t>(batch) != labels.size() || batch == 0)
        throw std::invalid_argument("loss_and_gradient: batch and label counts differ");
    if (inputs.rows() != net.input_width()) throw std::invalid_argument("loss_and_gradient: input width mismatch");

    Eigen::MatrixXd pre = p.w1 * inputs;
    pre.colwise() += p.b1;
    Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
    if (dropout_mask) hidden = hidden.cwiseProduct(*dropout_mask);
    Eigen::MatrixXd prob = p.w2 * hidden;
    prob.colwise() += p.b2;
    softmax_columns(prob);

    double loss = 0.0;
    for (Index k = 0; k < batch; ++k) {
        const int label = labels[static_cast<std::size_t>(k)];
        if (label < 0 || label >= net.classes()) throw std::invalid_argument("label out of range");
        loss -= std::log(std::max(prob(label, k), 1e-300));
    }
    loss /= static_cast<double>(batch);
    if (!gradients) return loss;

    Eigen::MatrixXd dz = std::move(prob);
    for (Index k = 0; k < batch; ++k) dz(labels[static_cast<std::size_t>(k)], k) -= 1.0;
    dz /= static_cast<double>(batch);
    gradients->w2.noalias() = dz * hidden.transpose();
    gradients->b2 = dz.rowwise().sum();
    Eigen::MatrixXd dh = p.w2.transpose() * dz;
    dh = dh.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    if (dropout_mask) dh = dh.cwiseProduct(*dropout_mask);
    gradients->w1.noalias() = dh * inputs.transpose();
    gradients->b1 = dh.rowwise().sum();
    return loss;
}

TrainingReport train(StageNetwork& net, const TrainingSet& data, const TrainingOptions& options)
{
    if (!(data.binding == net.binding())) throw BindingMismatch("training set and network are bound to different stages");
    if (options.batch_size < 1 || options.epochs < 0) throw std::invalid_argument("invalid training options");
    if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
        throw std::invalid_argument("validation fraction must lie in [0, 1)");

    CounterRng rng(options.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    const auto n_val = static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> training(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    TrainingReport report;
    report.train_samples = training.size();
    report.validation_samples = validation.size();
    if (training.empty()) return report;

    NetworkParameters& p = net.parameters();
    AdamMoments adam{zero_like(p), zero_like(p)};
    NetworkGradients grad = zero_like(p);
    const double keep = 1.0 - net.dropout_rate();
    double lr = options.learning_rate;
    long long step = 0;
    NetworkParameters best = p;
    double best_val = -1.0;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        shuffle(training, rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < training.size(); start += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t len = std::min<std::size_t>(options.batch_size, training.size() - start);
            Eigen::MatrixXd x(net.input_width(), static_cast<Index>(len));
            std::vector<int> y(len);
            for (std::size_t k = 0; k < len; ++k) {
                x.col(static_cast<Index>(k)) = data.inputs.col(static_cast<Index>(training[start + k]));
                y[k] = data.labels[training[start + k]];
            }
            Eigen::MatrixXd mask;
            if (net.dropout_rate() > 0.0) {
                mask.resize(net.hidden_width(), static_cast<Index>(len));
                for (Index j = 0; j < mask.cols(); ++j)
                    for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
            }
            const double loss = loss_and_gradient(net, x, y, &grad, mask.size() ? &mask : nullptr);
            if (!std::isfinite(loss))
                throw TrainingFailure("training diverged at epoch " + std::to_string(epoch) + " (" +
                                      describe(options, net.dropout_rate()) + ")");
            loss_sum += loss;
            ++batches;

            if (options.optimizer == Optimizer::adam) {
                ++step;
                const double c1 = 1.0 - std::pow(0.9, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(0.999, static_cast<double>(step));
                adam_step(p.w1, adam.first.w1, adam.second.w1, grad.w1, lr, c1, c2);
                adam_step(p.b1, adam.first.b1, adam.second.b1, grad.b1, lr, c1, c2);
                adam_step(p.w2, adam.first.w2, adam.second.w2, grad.w2, lr, c1, c2);
                adam_step(p.b2, adam.first.b2, adam.second.b2, grad.b2, lr, c1, c2);
            } else {
                p.w1 -= lr * grad.w1;
                p.b1 -= lr * grad.b1;
                p.w2 -= lr * grad.w2;
                p.b2 -= lr * grad.b2;
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(batches);
        rec.train_accuracy = accuracy_on(net, data.inputs, data.labels, training, options.accuracy_probe);
        rec.validation_accuracy = validation.empty() ? rec.train_accuracy
                                                     : accuracy_on(net, data.inputs, data.labels, validation,
                                                                   validation.size());
        report.epochs.push_back(rec);
        if (rec.validation_accuracy > best_val) {
            best_val = rec.validation_accuracy;
            if (options.restore_best) best = p;
        }
        lr *= options.learning_rate_decay;
    }
    if (options.restore_best && best_val >= 0.0) p = best;
    report.best_validation_accuracy = std::max(best_val, 0.0);
    return report;
}

void write_training_report(std::ostream& out, const TrainingReport& report)
{
    const auto precision = out.precision(6);
    for (const auto& e : report.epochs)
        out << "epoch=" << e.epoch << " loss=" << e.loss << " train_acc=" << e.train_accuracy
            << " val_acc=" << e.validation_accuracy << '\n';
    out.precision(precision);
}

Classification classify(const StageNetwork& net, const SubspaceBasis& b)
{
    if (b.ambient_dim() != net.binding().input_dim || b.subspace_dim() != net.binding().m)
        throw std::invalid_argument("classify: input is " + std::to_string(b.ambient_dim()) + "x" +
                                    std::to_string(b.subspace_dim()) + ", network expects " +
                                    std::to_string(net.binding().input_dim) + "x" + std::to_string(net.binding().m));
    Classification c;
    c.probabilities = net.probabilities(canonicalize(b));
    Index arg = 0;
    c.probabilities.maxCoeff(&arg);
    c.index = static_cast<std::size_t>(arg);
    return c;
}

double accuracy(const StageNetwork& net, const TrainingSet& data)
{
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return accuracy_on(net, data.inputs, data.labels, all, all.size());
}

void save_network(const std::filesystem::path& path, const StageNetwork& net)
{
    io::BinaryWriter w(path);
    const NetworkBinding& b = net.binding();
    w.bytes(kNetworkMagic);
    w.u32(kNetworkFormatVersion);
    w.u32(static_cast<std::uint32_t>(b.input_dim));
    w.u32(static_cast<std::uint32_t>(b.m));
    w.u32(static_cast<std::uint32_t>(b.bits));
    w.u64(b.codebook_seed);
    w.f64(net.dropout_rate());
    w.u32(static_cast<std::uint32_t>(net.input_width()));
    w.u32(static_cast<std::uint32_t>(net.hidden_width()));
    w.u32(static_cast<std::uint32_t>(net.classes()));
    const NetworkParameters& p = net.parameters();
    w.real_matrix(p.w1);
    w.real_matrix(p.b1);
    w.real_matrix(p.w2);
    w.real_matrix(p.b2);
    w.finish();
}

StageNetwork load_network(const std::filesystem::path& path)
{
    io::BinaryReader r(path);
    r.expect_magic(kNetworkMagic);
    if (const auto version = r.u32(); version != kNetworkFormatVersion)
        throw FormatError("'" + path.string() + "' has network format version " + std::to_string(version) +
                          ", expected " + std::to_string(kNetworkFormatVersion));
    StageNetwork net;
    net.binding_.input_dim = r.u32();
    net.binding_.m = r.u32();
    net.binding_.bits = static_cast<int>(r.u32());
    net.binding_.codebook_seed = r.u64();
    net.dropout_rate_ = r.f64();
    const Index in = r.u32();
    const Index hidden = r.u32();
    const Index classes = r.u32();
    const NetworkBinding& b = net.binding_;
    const bool valid = b.input_dim >= 2 && b.input_dim <= 4096 && b.m >= 1 && b.m < b.input_dim && b.bits >= 1 &&
                       b.bits <= kMaxStageBits && in == net.input_width() && hidden == net.hidden_width() &&
                       classes == net.classes() && net.dropout_rate_ >= 0.0 && net.dropout_rate_ < 1.0;
    if (!valid) throw FormatError("'" + path.string() + "' has an invalid network header");
    const auto needed = static_cast<std::uintmax_t>(8) * static_cast<std::uintmax_t>(hidden * in + hidden + classes * hidden + classes);
    if (std::filesystem::file_size(path) < needed) throw FormatError("'" + path.string() + "' is truncated");
    NetworkParameters& p = net.params_;
    p.w1 = r.real_matrix(hidden, in);
    p.b1 = r.real_matrix(hidden, 1);
    p.w2 = r.real_matrix(classes, hidden);
    p.b2 = r.real_matrix(classes, 1);
    r.expect_end();
    return net;
}

StageNetwork load_network_for(const std::filesystem::path& path, const StageCodebook& sc, Index m)
{
    StageNetwork net = load_network(path);
    const NetworkBinding expected{sc.input_dim, m, sc.bits, sc.seed};
    if (!(net.binding() == expected))
        throw BindingMismatch("'" + path.string() + "' was trained for stage d=" + std::to_string(net.binding().input_dim) +
                              " m=" + std::to_string(net.binding().m) + " bits=" + std::to_string(net.binding().bits) +
                              " seed=" + std::to_string(net.binding().codebook_seed) + ", not for d=" +
                              std::to_string(sc.input_dim) + " m=" + std::to_string(m) + " bits=" +
                              std::to_string(sc.bits) + " seed=" + std::to_string(sc.seed));
    return net;
}

NetworkSelector::NetworkSelector(const CodebookLadder& ladder, std::vector<StageNetwork> networks)
    : networks_(std::move(networks))
{
    if (networks_.size() != ladder.stage_count())
        throw std::invalid_argument("need one network per ladder stage");
    for (std::size_t i = 0; i < networks_.size(); ++i) {
        const StageCodebook& sc = ladder.stages[i];
        const NetworkBinding expected{sc.input_dim, ladder.m, sc.bits, sc.seed};
        if (!(networks_[i].binding() == expected))
            throw BindingMismatch("network for stage " + std::to_string(i) + " is bound to a different codebook");
    }
}

std::size_t NetworkSelector::select(std::size_t stage, const SubspaceBasis& input, const StageCodebook&) const
{
    return classify(networks_.at(stage), input).index;
}

std::string network_file_name(std::size_t stage)
{
    std::string idx = std::to_string(stage);
    if (idx.size() < 2) idx.insert(0, 2 - idx.size(), '0');
    return "stage_" + idx + ".net";
}

NetworkSelector load_network_selector(const std::filesystem::path& dir, const CodebookLadder& ladder)
{
    std::vector<StageNetwork> nets;
    nets.reserve(ladder.stage_count());
    for (std::size_t i = 0; i < ladder.stage_count(); ++i)
        nets.push_back(load_network_for(dir / network_file_name(i), ladder.stages[i], ladder.m));
    return NetworkSelector(ladder, std::move(nets));
}

std::vector<StageNetwork> train_ladder(const CodebookLadder& ladder, const LadderTrainingOptions& options,
                                       std::vector<TrainingReport>* reports, std::size_t threads)
{
    const std::size_t stages = ladder.stage_count();
    std::vector<StageNetwork> nets(stages);
    std::vector<TrainingReport> local(stages);
    const auto count = static_cast<std::size_t>(std::llround(options.samples_per_class * std::ldexp(1.0, ladder.bits_per_stage)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < stages; i = next++) {
            try {
                const CounterRng stage_rng(CounterRng::derive_seed(options.seed, i));
                CounterRng data_rng = stage_rng.substream(0);
                const TrainingSet data = generate_training_set(ladder.stages[i], ladder.m, count, data_rng);
                StageNetwork net(data.binding, stage_rng.substream(1).key(), options.dropout_rate);
                TrainingOptions opts = options.training;
                opts.seed = stage_rng.substream(2).key();
                local[i] = train(net, data, opts);
                nets[i] = std::move(net);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, stages));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    if (reports) *reports = std::move(local);
    return nets;
}

} // namespace grassq
