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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "grassq/classifier.hpp"
#include "grassq/errors.hpp"
#include "support.hpp"

using namespace grassq;

namespace {

std::filesystem::path temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "grassq_test_classifier";
    std::filesystem::create_directories(dir);
    return dir / name;
}

SubspaceBasis with_phases(const SubspaceBasis& b, CounterRng& rng)
{
    ComplexMatrix a = b.matrix();
    for (Index j = 0; j < a.cols(); ++j) a.col(j) *= std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    return SubspaceBasis::assume_orthonormal(std::move(a));
}

} // namespace

TEST_CASE("canonical features", "[classifier][canonical]")
{
    const double r = 1.0 / std::sqrt(2.0);
    ComplexVector v(2);
    v << std::polar(r, std::numbers::pi / 4.0), std::complex<double>(0.0, r);
    const Eigen::VectorXd f = canonicalize(SubspaceBasis::from_vector(v));
    REQUIRE(f.size() == 4);
    // Rotating by e^{-j pi/4}: (r, r e^{j pi/4}) -> real (r, 1/2), imag (0, 1/2).
    CHECK(std::abs(f(0) - r) <= 1e-15);
    CHECK(std::abs(f(1) - 0.5) <= 1e-15);
    CHECK(f(2) == 0.0);
    CHECK(std::abs(f(3) - 0.5) <= 1e-15);

    CounterRng rng(1);
    for (auto [d, m] : {std::pair<Index, Index>{4, 1}, {6, 2}, {9, 3}}) {
        for (int t = 0; t < 200; ++t) {
            const SubspaceBasis b = random_semiunitary(d, m, rng);
            REQUIRE((canonicalize(b) - canonicalize(with_phases(b, rng))).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    // Negligible first entry: the largest entry decides the rotation, first on ties.
    ComplexVector z = ComplexVector::Zero(3);
    z << 1e-14, std::complex<double>(0.0, 0.6), std::complex<double>(-0.8, 0.0);
    const Eigen::VectorXd g = canonicalize(SubspaceBasis::from_vector(z));
    CHECK(std::abs(g(2) - 0.8) <= 1e-15);
    CHECK(std::abs(g(5)) <= 1e-15);
    ComplexVector tie = ComplexVector::Zero(3);
    tie << 0.0, std::complex<double>(0.0, -std::sqrt(0.5)), std::sqrt(0.5);
    const Eigen::VectorXd h = canonicalize(SubspaceBasis::from_vector(tie));
    CHECK(std::abs(h(1) - std::sqrt(0.5)) <= 1e-15);
    CHECK(std::abs(h(4)) <= 1e-15);
}

TEST_CASE("network shapes and probabilities", "[classifier][network]")
{
    const NetworkBinding bind{5, 1, 4, 9};
    const StageNetwork net(bind, 3);
    CHECK(net.input_width() == 10);
    CHECK(net.hidden_width() == 150);
    CHECK(net.classes() == 16);
    CHECK(net.parameters().w1.rows() == 150);
    CHECK(net.parameters().w1.cols() == 10);
    CHECK(net.parameters().w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
    CHECK(net.parameters().w2.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(150.0));
    CHECK(net.parameters().b1.isZero());

    CounterRng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd p = net.probabilities(canonicalize(random_semiunitary(5, 1, rng)));
        REQUIRE(std::abs(p.sum() - 1.0) <= 1e-6);
        REQUIRE(p.minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(StageNetwork(NetworkBinding{3, 3, 4, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(StageNetwork(bind, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(classify(net, random_semiunitary(4, 1, rng)), std::invalid_argument);
}

TEST_CASE("analytic gradient matches finite differences", "[classifier][network]")
{
    const StageCodebook sc = build_stage_codebook(4, 3, 5);
    CounterRng rng(3);
    const TrainingSet data = generate_training_set(sc, 2, 16, rng);
    StageNetwork net(data.binding, 4);
    // Move the hidden biases off zero so no ReLU sits on its kink.
    net.parameters().b1.setConstant(0.05);
    NetworkGradients grad;
    loss_and_gradient(net, data.inputs, data.labels, &grad);

    const double h = 1e-6;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = loss_and_gradient(net, data.inputs, data.labels, nullptr);
        param = saved - h;
        const double down = loss_and_gradient(net, data.inputs, data.labels, nullptr);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        REQUIRE(std::abs(numeric - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    };
    NetworkParameters& p = net.parameters();
    for (int k = 0; k < 3; ++k) probe(p.w1(7 * k, k), grad.w1(7 * k, k));
    for (int k = 0; k < 2; ++k) probe(p.b1(11 * k), grad.b1(11 * k));
    for (int k = 0; k < 3; ++k) probe(p.w2(k, 5 * k), grad.w2(k, 5 * k));
    for (int k = 0; k < 2; ++k) probe(p.b2(3 * k), grad.b2(3 * k));

    // A dropout mask of all ones matches inference mode.
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(net.hidden_width(), data.inputs.cols());
    CHECK(loss_and_gradient(net, data.inputs, data.labels, nullptr, &ones) ==
          loss_and_gradient(net, data.inputs, data.labels, nullptr));
}

TEST_CASE("training labels agree with exhaustive search", "[classifier][training]")
{
    const StageCodebook sc = build_stage_codebook(8, 4, 6);
    CounterRng rng(4);
    const TrainingSet data = generate_training_set(sc, 1, 40000, rng);
    REQUIRE(data.size() == 40000);
    CHECK(data.binding == NetworkBinding{8, 1, 4, 6});
    std::vector<int> hist(16, 0);
    for (int label : data.labels) ++hist[static_cast<std::size_t>(label)];
    for (int c : hist) CHECK(std::abs(c - 2500) <= 625);

    CounterRng again(4);
    const TrainingSet regenerated = generate_training_set(sc, 1, 100, again);
    for (Index k = 0; k < 100; ++k) {
        // Inputs are canonical features; rebuild the subspace from them.
        ComplexVector v(8);
        for (Index i = 0; i < 8; ++i) v(i) = {regenerated.inputs(i, k), regenerated.inputs(8 + i, k)};
        REQUIRE(static_cast<int>(stage_select(SubspaceBasis::from_vector(v), sc).index) == regenerated.labels[static_cast<std::size_t>(k)]);
        REQUIRE(regenerated.labels[static_cast<std::size_t>(k)] == data.labels[static_cast<std::size_t>(k)]);
    }
    CounterRng none(5);
    CHECK(generate_training_set(sc, 1, 0, none).size() == 0);
}

TEST_CASE("training can memorize a small set", "[classifier][training]")
{
    const StageCodebook sc = build_stage_codebook(3, 2, 7);
    CounterRng rng(5);
    const TrainingSet data = generate_training_set(sc, 1, 64, rng);
    StageNetwork net(data.binding, 6);
    TrainingOptions opt;
    opt.epochs = 400;
    opt.batch_size = 16;
    opt.learning_rate = 1e-2;
    opt.learning_rate_decay = 1.0;
    opt.validation_fraction = 0.0;
    const TrainingReport report = train(net, data, opt);
    CHECK(report.epochs.size() == 400);
    CHECK(report.epochs.back().loss < report.epochs.front().loss);
    CHECK(accuracy(net, data) == 1.0);
}

TEST_CASE("training is deterministic and reports divergence", "[classifier][training]")
{
    const StageCodebook sc = build_stage_codebook(4, 3, 8);
    CounterRng rng(6);
    const TrainingSet data = generate_training_set(sc, 1, 2000, rng);
    TrainingOptions opt;
    opt.epochs = 3;
    StageNetwork a(data.binding, 9, 0.2), b(data.binding, 9, 0.2);
    train(a, data, opt);
    train(b, data, opt);
    CHECK(a.parameters().w1 == b.parameters().w1);
    CHECK(a.parameters().b2 == b.parameters().b2);

    StageNetwork c(data.binding, 9);
    TrainingOptions wild = opt;
    wild.optimizer = Optimizer::sgd;
    wild.learning_rate = 1e300;
    try {
        train(c, data, wild);
        FAIL("expected TrainingFailure");
    } catch (const TrainingFailure& e) {
        CHECK(std::string(e.what()).find("learning_rate=") != std::string::npos);
    }

    StageNetwork wrong(NetworkBinding{4, 1, 3, 99}, 1);
    CHECK_THROWS_AS(train(wrong, data, opt), BindingMismatch);
}

TEST_CASE("network files round-trip", "[classifier][io]")
{
    const CodebookLadder ladder = build_ladder(5, 1, 3, 10);
    const StageNetwork net(NetworkBinding{5, 1, 3, ladder.stages[0].seed}, 11);
    const auto path = temp_path("net.bin");
    save_network(path, net);
    const StageNetwork back = load_network(path);
    CHECK(back.binding() == net.binding());
    CHECK(back.parameters().w1 == net.parameters().w1);
    CHECK(back.parameters().b1 == net.parameters().b1);
    CHECK(back.parameters().w2 == net.parameters().w2);
    CHECK(back.parameters().b2 == net.parameters().b2);
    CHECK_NOTHROW(load_network_for(path, ladder.stages[0], 1));
    CHECK_THROWS_AS(load_network_for(path, ladder.stages[1], 1), BindingMismatch);
    CHECK_THROWS_AS(load_network_for(path, build_stage_codebook(5, 3, 12), 1), BindingMismatch);

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 5);
    CHECK_THROWS_AS(load_network(path), FormatError);
    CHECK_THROWS_AS(load_network(temp_path("missing.bin")), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("classifier decisions ignore column phases", "[classifier][inference]")
{
    const StageNetwork net(NetworkBinding{6, 2, 4, 1}, 13);
    CounterRng rng(14);
    for (int t = 0; t < 200; ++t) {
        const SubspaceBasis b = random_semiunitary(6, 2, rng);
        const Classification c1 = classify(net, b);
        const Classification c2 = classify(net, with_phases(b, rng));
        REQUIRE(c1.index == c2.index);
        REQUIRE((c1.probabilities - c2.probabilities).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("network selector drives the recursion", "[classifier][inference]")
{
    const CodebookLadder ladder = build_ladder(4, 1, 3, 15);
    LadderTrainingOptions opt;
    opt.samples_per_class = 300;
    opt.training.epochs = 10;
    std::vector<TrainingReport> reports;
    std::vector<StageNetwork> nets = train_ladder(ladder, opt, &reports);
    REQUIRE(nets.size() == 3);
    REQUIRE(reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(nets[i].binding().input_dim == 4 - static_cast<Index>(i));

    const auto dir = temp_path("ladder");
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < nets.size(); ++i) save_network(dir / network_file_name(i), nets[i]);
    const NetworkSelector sel = load_network_selector(dir, ladder);

    CounterRng rng(16);
    double exhaustive = 0.0, learned = 0.0;
    for (int t = 0; t < 500; ++t) {
        const SubspaceBasis u = random_semiunitary(4, 1, rng);
        const MultiStageResult r = recursive_quantize_full(u, ladder, sel);
        REQUIRE(r.reconstruction.orthonormality_error() <= 1e-9);
        exhaustive += chordal_distance(u, recursive_quantize_full(u, ladder).reconstruction);
        learned += chordal_distance(u, r.reconstruction);
    }
    CHECK(learned >= exhaustive - 1e-9);
    CHECK(learned <= 2.0 * exhaustive);

    std::filesystem::remove(dir / network_file_name(2));
    CHECK_THROWS(load_network_selector(dir, ladder));
    std::filesystem::remove_all(dir);
}
