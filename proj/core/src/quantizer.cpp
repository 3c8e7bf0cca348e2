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

#include "grassq/quantizer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

#include <stdexcept>
#include <string>

#include "grassq/errors.hpp"

namespace grassq {

namespace {

constexpr double kSqbcGuard = 1e-10;

void check_input(const SubspaceBasis& u, const CodebookLadder& ladder)
{
    if (u.ambient_dim() != ladder.n || u.subspace_dim() != ladder.m)
        throw std::invalid_argument("input subspace is " + std::to_string(u.ambient_dim()) + "x" +
                                    std::to_string(u.subspace_dim()) + " but the ladder quantizes G(" +
                                    std::to_string(ladder.n) + ", " + std::to_string(ladder.m) + ")");
}

FeedbackRecord make_record(std::size_t time, std::size_t stages_total, std::size_t updated, int bits_per_stage)
{
    FeedbackRecord r;
    r.time = time;
    r.updated_stages = updated;
    r.bit_cost = feedback_header_bits(stages_total) + static_cast<int>(updated) * bits_per_stage;
    r.mode = updated == stages_total ? UpdateMode::full : UpdateMode::selective;
    return r;
}

} // namespace

SingleStageResult quantize_single_stage(const SubspaceBasis& u, const FlatCodebook& cb)
{
    if (cb.entries.empty()) throw std::invalid_argument("quantize_single_stage: empty codebook");
    if (u.ambient_dim() != cb.n || u.subspace_dim() != cb.m)
        throw std::invalid_argument("quantize_single_stage: input shape does not match the codebook");
    std::size_t best = 0;
    double best_overlap = -1.0;
    // Minimum chordal distance = maximum ||Q^H U||_F^2.
    for (std::size_t j = 0; j < cb.entries.size(); ++j) {
        const double overlap = (cb.entries[j].matrix().adjoint() * u.matrix()).squaredNorm();
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = j;
        }
    }
    return {best, cb.entries[best], chordal_distance(u, cb.entries[best])};
}

SubspaceBasis sqbc(const SubspaceBasis& b, const SubspaceBasis& w)
{
    if (b.ambient_dim() != w.ambient_dim() || w.subspace_dim() < b.subspace_dim())
        throw std::invalid_argument("sqbc: stage matrix must share the ambient dimension and have at least as many "
                                    "columns as the input");
    const ComplexMatrix c = w.matrix().adjoint() * b.matrix();
    if (c.cols() == 1) {
        const double a = c.squaredNorm();
        if (!(a >= kSqbcGuard)) throw DegenerateStep("sqbc: input is (nearly) orthogonal to the stage subspace");
        return SubspaceBasis::assume_orthonormal(c / std::sqrt(a));
    }
    ComplexMatrix gram = c.adjoint() * c;
    gram = 0.5 * (gram + gram.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() >= kSqbcGuard))
        throw DegenerateStep("sqbc: B^H W W^H B is rank deficient");
    return SubspaceBasis::assume_orthonormal(c * inv_sqrt_hermitian(gram));
}

double stage_distortion(const SubspaceBasis& b, const StageCodebook& sc, std::size_t index)
{
    const double m = static_cast<double>(b.subspace_dim());
    const double d = (b.matrix().adjoint() * sc.complements.col(static_cast<Index>(index))).squaredNorm() / m;
    return std::clamp(d, 0.0, 1.0);
}

StageChoice stage_select(const SubspaceBasis& b, const StageCodebook& sc)
{
    if (b.ambient_dim() != sc.input_dim)
        throw std::invalid_argument("stage_select: input has dimension " + std::to_string(b.ambient_dim()) +
                                    ", stage expects " + std::to_string(sc.input_dim));
    if (b.subspace_dim() >= sc.input_dim)
        throw std::invalid_argument("stage_select: input subspace does not fit the stage output");
    const Eigen::RowVectorXd alignment = (b.matrix().adjoint() * sc.complements).colwise().squaredNorm();
    Index best = 0;
    for (Index j = 1; j < alignment.size(); ++j)
        if (alignment(j) < alignment(best)) best = j;
    const auto index = static_cast<std::size_t>(best);
    return {index, sc.stage_matrix(index),
            std::clamp(alignment(best) / static_cast<double>(b.subspace_dim()), 0.0, 1.0)};
}

std::size_t ExhaustiveSelector::select(std::size_t, const SubspaceBasis& input, const StageCodebook& sc) const
{
    if (input.ambient_dim() != sc.input_dim) throw std::invalid_argument("stage input dimension mismatch");
    const Eigen::RowVectorXd alignment = (input.matrix().adjoint() * sc.complements).colwise().squaredNorm();
    Index best = 0;
    for (Index j = 1; j < alignment.size(); ++j)
        if (alignment(j) < alignment(best)) best = j;
    return static_cast<std::size_t>(best);
}

SubspaceBasis compose_stages(const std::vector<SubspaceBasis>& stage_matrices)
{
    if (stage_matrices.empty()) throw std::invalid_argument("compose_stages: no stages");
    ComplexMatrix acc = stage_matrices.back().matrix();
    for (auto it = stage_matrices.rbegin() + 1; it != stage_matrices.rend(); ++it) {
        if (it->subspace_dim() != acc.rows()) throw std::invalid_argument("compose_stages: stage shapes do not chain");
        acc = (it->matrix() * acc).eval();
    }
    return SubspaceBasis::assume_orthonormal(std::move(acc));
}

MultiStageResult recursive_quantize_full(const SubspaceBasis& u, const CodebookLadder& ladder,
                                         const StageSelector& selector)
{
    check_input(u, ladder);
    const std::size_t stages = ladder.stage_count();
    MultiStageResult out;
    out.indices.reserve(stages);
    out.stage_matrices.reserve(stages);
    out.stage_distortions.reserve(stages);
    SubspaceBasis b = u;
    for (std::size_t i = 0; i < stages; ++i) {
        const StageCodebook& sc = ladder.stages[i];
        const std::size_t index = selector.select(i, b, sc);
        out.indices.push_back(index);
        out.stage_distortions.push_back(stage_distortion(b, sc, index));
        out.stage_matrices.push_back(sc.stage_matrix(index));
        if (i + 1 < stages) b = sqbc(b, out.stage_matrices.back());
    }
    out.reconstruction = compose_stages(out.stage_matrices);
    return out;
}

MultiStageResult recursive_quantize_full(const SubspaceBasis& u, const CodebookLadder& ladder)
{
    return recursive_quantize_full(u, ladder, ExhaustiveSelector{});
}

void Hysteresis::validate() const
{
    if (!(lower >= 1.0 && upper >= lower))
        throw std::invalid_argument("hysteresis requires 1 <= c_l <= c_u, got c_l=" + std::to_string(lower) +
                                    " c_u=" + std::to_string(upper));
}

int feedback_header_bits(std::size_t stage_count)
{
    int bits = 0;
    while ((std::size_t{1} << bits) < stage_count + 1) ++bits;
    return bits;
}

QuantizerState::QuantizerState(const CodebookLadder& ladder, Hysteresis hysteresis)
    : ladder_(&ladder), hysteresis_(hysteresis)
{
    hysteresis_.validate();
    if (ladder.stages.empty()) throw std::invalid_argument("QuantizerState: empty ladder");
}

FeedbackRecord recursive_quantize_selective(const SubspaceBasis& u, QuantizerState& state, const DistortionModel& dm,
                                            const StageSelector& selector)
{
    const CodebookLadder& ladder = *state.ladder_;
    check_input(u, ladder);
    const std::size_t stages = ladder.stage_count();
    if (dm.stage_count() != stages)
        throw std::invalid_argument("distortion model has " + std::to_string(dm.stage_count()) +
                                    " stages, ladder has " + std::to_string(stages));
    const std::size_t time = state.time_++;

    if (!state.initialized()) {
        MultiStageResult full = recursive_quantize_full(u, ladder, selector);
        FeedbackRecord rec = make_record(time, stages, stages, ladder.bits_per_stage);
        rec.indices = full.indices;
        rec.distortion = chordal_distance(u, full.reconstruction);
        state.stage_matrices_ = std::move(full.stage_matrices);
        state.indices_ = std::move(full.indices);
        state.reconstruction_ = std::move(full.reconstruction);
        return rec;
    }

    const double current = chordal_distance(u, state.reconstruction_);
    if (current <= state.hysteresis_.upper * dm.total) {
        FeedbackRecord rec = make_record(time, stages, 0, ladder.bits_per_stage);
        rec.distortion = current;
        return rec;
    }

    // Rebuild the stage inputs B_0 .. B_{R-1} with the previous stage matrices.
    std::vector<SubspaceBasis> inputs;
    inputs.reserve(stages);
    inputs.push_back(u);
    std::vector<double> kept_distortion;
    kept_distortion.reserve(stages);
    bool degenerate = false;
    for (std::size_t i = 0; i + 1 < stages; ++i) {
        const SubspaceBasis& w_old = state.stage_matrices_[i];
        kept_distortion.push_back(chordal_distance(inputs[i], w_old));
        try {
            inputs.push_back(sqbc(inputs[i], w_old));
        } catch (const DegenerateStep&) {
            degenerate = true;
            break;
        }
    }

    std::size_t keep = 0;
    if (!degenerate) {
        // suffix[r] = prod_{i >= r} (1 - expected_i)
        std::vector<double> suffix(stages + 1, 1.0);
        for (std::size_t i = stages; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - dm.stage[i]);
        std::vector<double> prefix(stages, 1.0);
        for (std::size_t i = 1; i < stages; ++i) prefix[i] = prefix[i - 1] * (1.0 - kept_distortion[i - 1]);
        const double acceptable = state.hysteresis_.lower * dm.total;
        for (std::size_t r = stages - 1; r >= 1; --r) {
            if (1.0 - prefix[r] * suffix[r] <= acceptable) {
                keep = r;
                break;
            }
        }
    }

    FeedbackRecord rec = make_record(time, stages, stages - keep, ladder.bits_per_stage);
    SubspaceBasis b = inputs[keep];
    for (std::size_t i = keep; i < stages; ++i) {
        const StageCodebook& sc = ladder.stages[i];
        const std::size_t index = selector.select(i, b, sc);
        state.indices_[i] = index;
        state.stage_matrices_[i] = sc.stage_matrix(index);
        rec.indices.push_back(index);
        if (i + 1 < stages) b = sqbc(b, state.stage_matrices_[i]);
    }
    state.reconstruction_ = compose_stages(state.stage_matrices_);
    rec.distortion = chordal_distance(u, state.reconstruction_);
    return rec;
}

FeedbackRecord recursive_quantize_selective(const SubspaceBasis& u, QuantizerState& state, const DistortionModel& dm)
{
    return recursive_quantize_selective(u, state, dm, ExhaustiveSelector{});
}

FeedbackRecord single_stage_selective(const SubspaceBasis& u, SingleStageState& state, const FlatCodebook& cb,
                                      double expected_distortion)
{
    if (!(state.upper_ >= 1.0)) throw std::invalid_argument("single-stage hysteresis requires c_u >= 1");
    FeedbackRecord rec;
    rec.time = state.time_++;
    if (state.initialized()) {
        const double current = chordal_distance(u, state.reconstruction_);
        if (current <= state.upper_ * expected_distortion) {
            rec.updated_stages = 0;
            rec.bit_cost = 1;
            rec.distortion = current;
            rec.mode = UpdateMode::selective;
            return rec;
        }
    }
    SingleStageResult q = quantize_single_stage(u, cb);
    state.index_ = q.index;
    state.reconstruction_ = std::move(q.reconstruction);
    rec.updated_stages = 1;
    rec.indices = {q.index};
    rec.bit_cost = 1 + cb.bits;
    rec.distortion = q.distortion;
    rec.mode = UpdateMode::full;
    return rec;
}

FeedbackDecoder::FeedbackDecoder(const CodebookLadder& ladder) : ladder_(&ladder) {}

const SubspaceBasis& FeedbackDecoder::apply(const FeedbackRecord& record)
{
    const std::size_t stages = ladder_->stage_count();
    if (record.updated_stages > stages || record.indices.size() != record.updated_stages)
        throw std::invalid_argument("feedback record is inconsistent with the ladder");
    if (stage_matrices_.empty()) {
        if (record.updated_stages != stages)
            throw std::invalid_argument("first feedback record must update every stage");
        stage_matrices_.resize(stages);
    }
    if (record.updated_stages == 0) return reconstruction_;
    const std::size_t first = stages - record.updated_stages;
    for (std::size_t j = 0; j < record.updated_stages; ++j)
        stage_matrices_[first + j] = ladder_->stages[first + j].stage_matrix(record.indices[j]);
    reconstruction_ = compose_stages(stage_matrices_);
    return reconstruction_;
}

} // namespace grassq
