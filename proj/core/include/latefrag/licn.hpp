// Copyright 2026 The latefrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Classification-head math for late-interaction multitask classification:
// task logits, the pairwise sigmoid contrastive loss with its gradients,
// uncertainty-weighted task combination and the prediction rules.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace latefrag::licn {

inline constexpr std::size_t kTaskCount = 5;
inline constexpr std::size_t kDefaultProjectionDim = 512;
inline constexpr double kDefaultThreshold = 0.5;

enum class TaskId : std::uint8_t { Artist = 0, Genre = 1, Style = 2, Media = 3, Tags = 4 };
enum class TaskKind { Multiclass, Multilabel };

struct TaskSpec {
  TaskId id;
  TaskKind kind;
};

/// Artist, Genre and Style are multiclass; Media and Tags are multilabel.
TaskSpec task_spec(TaskId id) noexcept;
std::string_view to_string(TaskId id) noexcept;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws Error(ShapeMismatch) if data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b^T
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Entries in {-1, +1}: +1 where image i carries class/label j.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  /// Throws Error(InvalidArgument) on entries other than -1/+1 and
  /// Error(ShapeMismatch) on a size mismatch.
  LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::int8_t> entries);

  /// Rows with exactly one positive at column `classes[i]`.
  static LabelMatrix one_hot(std::span<const std::size_t> classes, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * cols_ + j]; }

  /// True when each row has exactly one +1 (the multiclass invariant).
  bool one_positive_per_row() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int8_t> entries_;
};

/// Task-specific image embeddings (M x 5 x p) with, per task, the N_t x p
/// embeddings of the classes/labels present in the batch.
struct EmbeddingBatch {
  std::size_t images = 0;
  std::size_t projection_dim = 0;
  std::vector<double> image_embeddings;  // [image][task][p]
  std::array<Matrix, kTaskCount> label_embeddings;

  /// The M x p slice for one task.
  Matrix image_task(TaskId t) const;
};

/// Z_t = T_I[:, t, :] * T_q^T. Throws Error(DimMismatch).
Matrix compute_logits(const EmbeddingBatch& batch, TaskId t);

/// Temperature and bias of the pairwise sigmoid loss.
struct LossParams {
  double temperature = 1.0;  // c > 0
  double bias = 0.0;         // b
};

/// Overflow-safe log(1 + e^x).
double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

/// Mean over all pairs of softplus(-y * (c * z - b)). Throws
/// Error(ShapeMismatch), or Error(InvalidArgument) if c <= 0.
double siglip_loss(const Matrix& logits, const LabelMatrix& labels, const LossParams& params);

struct SiglipGradient {
  double loss = 0.0;
  Matrix d_logits;
  double d_temperature = 0.0;
  double d_bias = 0.0;
};

SiglipGradient siglip_loss_grad(const Matrix& logits, const LabelMatrix& labels,
                                const LossParams& params);

struct EmbeddingGradient {
  Matrix d_image;   // M x p, gradient w.r.t. T_I[:, t, :]
  Matrix d_labels;  // N_t x p
};

/// Chain rule through Z = T_I T_q^T. Throws Error(ShapeMismatch).
EmbeddingGradient backprop_to_embeddings(const Matrix& d_logits, const EmbeddingBatch& batch, TaskId t);
EmbeddingGradient backprop_to_embeddings(const Matrix& d_logits, const Matrix& image_task,
                                         const Matrix& label_embeddings);

/// Sum_t exp(-s_t) * L_t + s_t, with s_t a learnable log-variance per task.
/// Throws Error(LengthMismatch).
double combine_losses_uncertainty(std::span<const double> losses, std::span<const double> log_vars);

struct UncertaintyGradient {
  std::vector<double> d_losses;    // exp(-s_t)
  std::vector<double> d_log_vars;  // 1 - exp(-s_t) * L_t
};
UncertaintyGradient combine_losses_uncertainty_grad(std::span<const double> losses,
                                                    std::span<const double> log_vars);

/// Argmax; ties go to the lowest index. Throws Error(EmptyCandidates).
std::size_t predict_multiclass(std::span<const double> scores);

/// Indices j with sigmoid(c * z_j - b) >= threshold. Throws
/// Error(InvalidThreshold) unless 0 < threshold < 1.
std::vector<std::size_t> predict_multilabel(std::span<const double> scores, const LossParams& params,
                                            double threshold = kDefaultThreshold);

/// Gradient-descent fit of one shared linear projection W (f x p) mapping
/// image features and label features into the logit space, together with
/// log c and b. Used as an end-to-end check of the gradients above.
struct LinearHeadProblem {
  Matrix image_features;  // M x f
  Matrix label_features;  // N x f
  LabelMatrix labels;     // M x N
};

struct LinearHeadOptions {
  std::size_t projection_dim = 16;
  std::size_t max_steps = 2000;
  double learning_rate = 0.5;
  double target_loss = 0.01;
  double init_scale = 0.1;
  double init_log_temperature = 0.0;
  double init_bias = 0.0;
  std::uint64_t seed = 7;
};

struct LinearHeadFit {
  Matrix projection;
  LossParams params;
  std::vector<double> losses;  // loss before each step, plus the final loss
  std::size_t steps = 0;
  double final_loss = 0.0;
};

LinearHeadFit fit_linear_head(const LinearHeadProblem& problem, const LinearHeadOptions& options = {});

}  // namespace latefrag::licn
