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

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grassq/codebook.hpp"
#include "grassq/numerics.hpp"
#include "grassq/quantizer.hpp"
#include "grassq/rng.hpp"

namespace grassq {

/// Real feature vector of length 2 d m: real parts of vec(B) followed by the
/// imaginary parts, after rotating each column so its first-row entry is
/// real and nonnegative. Columns whose first entry is below 1e-12 in
/// magnitude are rotated by their largest entry instead (first one on ties);
/// all-negligible columns are left as they are.
Eigen::VectorXd canonicalize(const SubspaceBasis& b);

/// Ties a network to the stage codebook whose indices it predicts.
struct NetworkBinding {
    Index input_dim = 0; // d of the stage
    Index m = 0;
    int bits = 0;
    std::uint64_t codebook_seed = 0;

    bool operator==(const NetworkBinding&) const = default;
};

struct NetworkParameters {
    Eigen::MatrixXd w1; // hidden x input
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2; // classes x hidden
    Eigen::VectorXd b2;
};

/// Two-layer classifier for one stage: input 2 d m, ReLU hidden layer of
/// 15 * 2 d m units with dropout, softmax output over the 2^bits entries.
class StageNetwork {
  public:
    static constexpr int kHiddenFactor = 15;

    StageNetwork() = default;
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases.
    StageNetwork(NetworkBinding binding, std::uint64_t init_seed, double dropout_rate = 0.0);

    const NetworkBinding& binding() const noexcept { return binding_; }
    Index input_width() const noexcept { return 2 * binding_.input_dim * binding_.m; }
    Index hidden_width() const noexcept { return kHiddenFactor * input_width(); }
    Index classes() const noexcept { return Index{1} << binding_.bits; }
    double dropout_rate() const noexcept { return dropout_rate_; }

    const NetworkParameters& parameters() const noexcept { return params_; }
    NetworkParameters& parameters() noexcept { return params_; }

    /// Logits for a batch of canonical inputs stored one sample per column.
    Eigen::MatrixXd logits(const Eigen::MatrixXd& inputs) const;
    Eigen::VectorXd probabilities(const Eigen::VectorXd& input) const;

  private:
    friend StageNetwork load_network(const std::filesystem::path&);
    NetworkBinding binding_;
    double dropout_rate_ = 0.0;
    NetworkParameters params_;
};

/// Labeled samples for one stage; inputs hold one canonical vector per column.
struct TrainingSet {
    NetworkBinding binding;
    Eigen::MatrixXd inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

/// `count` isotropic d x m inputs labeled by exhaustive stage search.
TrainingSet generate_training_set(const StageCodebook& sc, Index m, std::size_t count, CounterRng& rng);

enum class Optimizer { sgd, adam };

struct TrainingOptions {
    int epochs = 40;
    Index batch_size = 128;
    double learning_rate = 3e-3;
    double learning_rate_decay = 0.95; // multiplied in after every epoch
    double validation_fraction = 0.1;
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 1;
    std::size_t accuracy_probe = 20000; // training samples scored per epoch
    bool restore_best = true;           // keep the parameters of the best validation epoch
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0; // mean training cross-entropy (with dropout)
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
    double best_validation_accuracy = 0.0;
};

/// One line per epoch: "epoch=<e> loss=<l> train_acc=<a> val_acc=<v>".
void write_training_report(std::ostream& out, const TrainingReport& report);

/// Mini-batch cross-entropy training with dropout. Throws TrainingFailure
/// (with the hyperparameters in the message) if the loss becomes non-finite.
TrainingReport train(StageNetwork& net, const TrainingSet& data, const TrainingOptions& options);

struct NetworkGradients {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

/// Mean cross-entropy of a batch and, optionally, its gradient. A dropout
/// mask (hidden x batch, already scaled by 1 / (1 - rate)) may be supplied;
/// without one the network is evaluated in inference mode.
double loss_and_gradient(const StageNetwork& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                         NetworkGradients* gradients, const Eigen::MatrixXd* dropout_mask = nullptr);

struct Classification {
    std::size_t index = 0;
    Eigen::VectorXd probabilities;
};

Classification classify(const StageNetwork& net, const SubspaceBasis& b);

/// Fraction of samples whose argmax equals the label.
double accuracy(const StageNetwork& net, const TrainingSet& data);

inline constexpr std::uint32_t kNetworkFormatVersion = 1;

void save_network(const std::filesystem::path& path, const StageNetwork& net);
StageNetwork load_network(const std::filesystem::path& path);
/// Loads a network and refuses it (BindingMismatch) unless it was trained
/// for exactly this stage codebook and subspace dimension.
StageNetwork load_network_for(const std::filesystem::path& path, const StageCodebook& sc, Index m);

/// Stage selector backed by one network per ladder stage.
class NetworkSelector final : public StageSelector {
  public:
    NetworkSelector(const CodebookLadder& ladder, std::vector<StageNetwork> networks);
    std::size_t select(std::size_t stage, const SubspaceBasis& input, const StageCodebook& sc) const override;
    const std::vector<StageNetwork>& networks() const noexcept { return networks_; }

  private:
    std::vector<StageNetwork> networks_;
};

/// File name of stage i's network inside a network directory.
std::string network_file_name(std::size_t stage);

/// Loads stage_00.net ... for every ladder stage, checking each binding.
NetworkSelector load_network_selector(const std::filesystem::path& dir, const CodebookLadder& ladder);

struct LadderTrainingOptions {
    TrainingOptions training;
    double samples_per_class = 4000.0; // training set size = samples_per_class * 2^bits
    double dropout_rate = 0.0;
    std::uint64_t seed = 1;
};

/// Trains one network per ladder stage (stage i uses seed substream i).
std::vector<StageNetwork> train_ladder(const CodebookLadder& ladder, const LadderTrainingOptions& options,
                                       std::vector<TrainingReport>* reports = nullptr, std::size_t threads = 1);

} // namespace grassq
