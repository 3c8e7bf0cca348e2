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

#include <cstddef>
#include <optional>
#include <vector>

#include "grassq/codebook.hpp"
#include "grassq/distortion.hpp"
#include "grassq/numerics.hpp"

namespace grassq {

struct SingleStageResult {
    std::size_t index = 0;
    SubspaceBasis reconstruction;
    double distortion = 0.0;
};

/// Exhaustive minimum chordal distance search; ties go to the lowest index.
SingleStageResult quantize_single_stage(const SubspaceBasis& u, const FlatCodebook& cb);

/// SQBC matrix W^H B (B^H W W^H B)^{-1/2}: the semi-unitary coordinates of
/// the part of span(B) captured by span(W). Throws DegenerateStep when the
/// smallest eigenvalue of B^H W W^H B is below 1e-10.
SubspaceBasis sqbc(const SubspaceBasis& b, const SubspaceBasis& w);

struct StageChoice {
    std::size_t index = 0;
    SubspaceBasis stage_matrix; // d x (d-1)
    double distortion = 0.0;    // chordal_distance(B, stage_matrix) = ||B^H q||^2 / m
};

/// Orthogonal-complement search: the entry q minimizing q^H B B^H q, which
/// is the stage matrix of minimum chordal distance to span(B).
StageChoice stage_select(const SubspaceBasis& b, const StageCodebook& sc);

/// Stage distortion of entry `index` without forming the stage matrix.
double stage_distortion(const SubspaceBasis& b, const StageCodebook& sc, std::size_t index);

/// Chooses a codebook index for one stage. The exhaustive selector is the
/// reference; the classifier module provides a learned one.
class StageSelector {
  public:
    virtual ~StageSelector() = default;
    virtual std::size_t select(std::size_t stage, const SubspaceBasis& input, const StageCodebook& sc) const = 0;
};

class ExhaustiveSelector final : public StageSelector {
  public:
    std::size_t select(std::size_t stage, const SubspaceBasis& input, const StageCodebook& sc) const override;
};

/// U_hat = W_1 W_2 ... W_R, evaluated right to left.
SubspaceBasis compose_stages(const std::vector<SubspaceBasis>& stage_matrices);

struct MultiStageResult {
    std::vector<std::size_t> indices;
    std::vector<SubspaceBasis> stage_matrices;
    std::vector<double> stage_distortions;
    SubspaceBasis reconstruction;
};

/// Full R-stage recursion: B_0 = U, W_i = argmin over stage i, B_i = sqbc(B_{i-1}, W_i).
MultiStageResult recursive_quantize_full(const SubspaceBasis& u, const CodebookLadder& ladder);
MultiStageResult recursive_quantize_full(const SubspaceBasis& u, const CodebookLadder& ladder,
                                         const StageSelector& selector);

/// Hysteresis of the selective update, 1 <= lower <= upper.
struct Hysteresis {
    double upper = 2.0; // c_u: no update while the current error is below upper * expected
    double lower = 1.5; // c_l: acceptable predicted error when choosing stages to keep

    void validate() const;
};

enum class UpdateMode { full, selective };

/// What the receiver emits at one time instant. The updated stages are
/// always the last `updated_stages` of the ladder; `indices` lists their
/// codebook entries in stage order.
struct FeedbackRecord {
    std::size_t time = 0;
    std::size_t updated_stages = 0;
    std::vector<std::size_t> indices;
    int bit_cost = 0;
    double distortion = 0.0; // chordal distance of U[k] to the reconstruction in use
    UpdateMode mode = UpdateMode::full;
};

/// ceil(log2(R + 1)) header bits encoding the number of updated stages.
int feedback_header_bits(std::size_t stage_count);

/// Per-link memory of the selective recursive quantizer.
class QuantizerState {
  public:
    QuantizerState(const CodebookLadder& ladder, Hysteresis hysteresis);

    const CodebookLadder& ladder() const noexcept { return *ladder_; }
    const Hysteresis& hysteresis() const noexcept { return hysteresis_; }
    bool initialized() const noexcept { return !stage_matrices_.empty(); }
    std::size_t time() const noexcept { return time_; }
    const std::vector<SubspaceBasis>& stage_matrices() const noexcept { return stage_matrices_; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const SubspaceBasis& reconstruction() const noexcept { return reconstruction_; }

  private:
    friend FeedbackRecord recursive_quantize_selective(const SubspaceBasis&, QuantizerState&, const DistortionModel&,
                                                       const StageSelector&);
    const CodebookLadder* ladder_;
    Hysteresis hysteresis_;
    std::size_t time_ = 0;
    std::vector<SubspaceBasis> stage_matrices_;
    std::vector<std::size_t> indices_;
    SubspaceBasis reconstruction_;
};

/// One time instant of the selective recursive quantizer.
///
/// No stage is updated while chordal_distance(U, U_hat_prev) <= c_u * total.
/// Otherwise the inputs B_i of the old stage matrices are rebuilt and the
/// largest r < R with
///   1 - prod_{i<=r} (1 - d(B_{i-1}, W_i_prev)) prod_{i>r} (1 - expected_i) <= c_l * total
/// is kept (r = 0 if none qualifies); stages r+1..R are re-quantized.
/// The first call performs a full update.
FeedbackRecord recursive_quantize_selective(const SubspaceBasis& u, QuantizerState& state, const DistortionModel& dm,
                                            const StageSelector& selector);
FeedbackRecord recursive_quantize_selective(const SubspaceBasis& u, QuantizerState& state, const DistortionModel& dm);

class SingleStageState {
  public:
    explicit SingleStageState(double upper) : upper_(upper) {}
    double upper() const noexcept { return upper_; }
    bool initialized() const noexcept { return !reconstruction_.empty(); }
    const SubspaceBasis& reconstruction() const noexcept { return reconstruction_; }
    std::size_t index() const noexcept { return index_; }
    std::size_t time() const noexcept { return time_; }

  private:
    friend FeedbackRecord single_stage_selective(const SubspaceBasis&, SingleStageState&, const FlatCodebook&, double);
    double upper_;
    std::size_t time_ = 0;
    std::size_t index_ = 0;
    SubspaceBasis reconstruction_;
};

/// Keeps the previous quantization while its chordal distance to U is at
/// most c_u * expected; one header bit plus `bits` when updating.
FeedbackRecord single_stage_selective(const SubspaceBasis& u, SingleStageState& state, const FlatCodebook& cb,
                                      double expected_distortion);

/// Transmitter-side reconstruction from the feedback stream alone.
class FeedbackDecoder {
  public:
    explicit FeedbackDecoder(const CodebookLadder& ladder);
    /// Applies one record and returns the current reconstruction.
    const SubspaceBasis& apply(const FeedbackRecord& record);
    const SubspaceBasis& reconstruction() const noexcept { return reconstruction_; }

  private:
    const CodebookLadder* ladder_;
    std::vector<SubspaceBasis> stage_matrices_;
    SubspaceBasis reconstruction_;
};

} // namespace grassq
