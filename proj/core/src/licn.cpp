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

#include "latefrag/licn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "latefrag/error.hpp"

namespace latefrag::licn {

TaskSpec task_spec(TaskId id) noexcept {
  switch (id) {
    case TaskId::Artist:
    case TaskId::Genre:
    case TaskId::Style: return {id, TaskKind::Multiclass};
    case TaskId::Media:
    case TaskId::Tags: return {id, TaskKind::Multilabel};
  }
  return {id, TaskKind::Multiclass};
}

std::string_view to_string(TaskId id) noexcept {
  switch (id) {
    case TaskId::Artist: return "artist";
    case TaskId::Genre: return "genre";
    case TaskId::Style: return "style";
    case TaskId::Media: return "media";
    case TaskId::Tags: return "tags";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::ShapeMismatch, "matrix data size " + std::to_string(data_.size()) +
                                              " for " + std::to_string(rows_) + "x" +
                                              std::to_string(cols_));
  }
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimMismatch, "inner dims " + std::to_string(a.cols()) + " vs " +
                                            std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ra = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto rb = b.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) dot += ra[k] * rb[k];
      out(i, j) = dot;
    }
  }
  return out;
}

namespace {

// a^T * b for a (n x p), b (n x q) -> p x q
Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  for (std::size_t n = 0; n < a.rows(); ++n) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = a(n, i);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(n, j);
    }
  }
  return out;
}

// a * b for a (n x k), b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(k, j);
    }
  }
  return out;
}

void check_shapes(const Matrix& logits, const LabelMatrix& labels, const LossParams& params) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "logits " + std::to_string(logits.rows()) + "x" +
                                              std::to_string(logits.cols()) + " vs labels " +
                                              std::to_string(labels.rows()) + "x" +
                                              std::to_string(labels.cols()));
  }
  if (logits.rows() == 0 || logits.cols() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "empty logits matrix");
  }
  if (!(params.temperature > 0.0) || !std::isfinite(params.temperature) ||
      !std::isfinite(params.bias)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
  }
}

}  // namespace

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::int8_t> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) throw Error(ErrorCode::ShapeMismatch, "label matrix size");
  for (auto e : entries_) {
    if (e != 1 && e != -1) throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
  }
}

LabelMatrix LabelMatrix::one_hot(std::span<const std::size_t> classes, std::size_t cols) {
  std::vector<std::int8_t> e(classes.size() * cols, -1);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= cols) throw Error(ErrorCode::InvalidArgument, "class index out of range");
    e[i * cols + classes[i]] = 1;
  }
  return LabelMatrix(classes.size(), cols, std::move(e));
}

bool LabelMatrix::one_positive_per_row() const noexcept {
  for (std::size_t i = 0; i < rows_; ++i) {
    std::size_t positives = 0;
    for (std::size_t j = 0; j < cols_; ++j) positives += (*this)(i, j) > 0;
    if (positives != 1) return false;
  }
  return true;
}

Matrix EmbeddingBatch::image_task(TaskId t) const {
  const auto task = static_cast<std::size_t>(t);
  if (image_embeddings.size() != images * kTaskCount * projection_dim) {
    throw Error(ErrorCode::ShapeMismatch, "image embeddings are not M x 5 x p");
  }
  Matrix out(images, projection_dim);
  for (std::size_t i = 0; i < images; ++i) {
    const double* src = image_embeddings.data() + (i * kTaskCount + task) * projection_dim;
    for (std::size_t k = 0; k < projection_dim; ++k) out(i, k) = src[k];
  }
  return out;
}

Matrix compute_logits(const EmbeddingBatch& batch, TaskId t) {
  const Matrix& labels = batch.label_embeddings[static_cast<std::size_t>(t)];
  if (labels.cols() != batch.projection_dim) {
    throw Error(ErrorCode::DimMismatch, "label embeddings have dim " + std::to_string(labels.cols()) +
                                            ", images " + std::to_string(batch.projection_dim));
  }
  return matmul_transposed(batch.image_task(t), labels);
}

double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double siglip_loss(const Matrix& logits, const LabelMatrix& labels, const LossParams& params) {
  check_shapes(logits, labels, params);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double margin = labels(i, j) * (params.temperature * logits(i, j) - params.bias);
      total += softplus(-margin);
    }
  }
  return total / static_cast<double>(logits.rows() * logits.cols());
}

SiglipGradient siglip_loss_grad(const Matrix& logits, const LabelMatrix& labels,
                                const LossParams& params) {
  check_shapes(logits, labels, params);
  const double inv = 1.0 / static_cast<double>(logits.rows() * logits.cols());
  SiglipGradient g;
  g.d_logits = Matrix(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double y = labels(i, j);
      const double z = logits(i, j);
      const double margin = y * (params.temperature * z - params.bias);
      g.loss += softplus(-margin);
      // d softplus(-m) / dm = -sigmoid(-m)
      const double w = -sigmoid(-margin) * inv;
      g.d_logits(i, j) = w * y * params.temperature;
      g.d_temperature += w * y * z;
      g.d_bias -= w * y;
    }
  }
  g.loss *= inv;
  return g;
}

EmbeddingGradient backprop_to_embeddings(const Matrix& d_logits, const Matrix& image_task,
                                         const Matrix& label_embeddings) {
  if (d_logits.rows() != image_task.rows() || d_logits.cols() != label_embeddings.rows() ||
      image_task.cols() != label_embeddings.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "backprop shapes");
  }
  // dT_I = dZ * T_q, dT_q = dZ^T * T_I
  return {matmul(d_logits, label_embeddings), transposed_matmul(d_logits, image_task)};
}

EmbeddingGradient backprop_to_embeddings(const Matrix& d_logits, const EmbeddingBatch& batch, TaskId t) {
  return backprop_to_embeddings(d_logits, batch.image_task(t),
                                batch.label_embeddings[static_cast<std::size_t>(t)]);
}

double combine_losses_uncertainty(std::span<const double> losses, std::span<const double> log_vars) {
  if (losses.size() != log_vars.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(losses.size()) + " losses, " +
                                               std::to_string(log_vars.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    total += std::exp(-log_vars[t]) * losses[t] + log_vars[t];
  }
  return total;
}

UncertaintyGradient combine_losses_uncertainty_grad(std::span<const double> losses,
                                                    std::span<const double> log_vars) {
  if (losses.size() != log_vars.size()) throw Error(ErrorCode::LengthMismatch, "uncertainty grad");
  UncertaintyGradient g;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    const double w = std::exp(-log_vars[t]);
    g.d_losses.push_back(w);
    g.d_log_vars.push_back(1.0 - w * losses[t]);
  }
  return g;
}

std::size_t predict_multiclass(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate classes");
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

std::vector<std::size_t> predict_multilabel(std::span<const double> scores, const LossParams& params,
                                            double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (sigmoid(params.temperature * scores[j] - params.bias) >= threshold) out.push_back(j);
  }
  return out;
}

LinearHeadFit fit_linear_head(const LinearHeadProblem& problem, const LinearHeadOptions& options) {
  const Matrix& x = problem.image_features;
  const Matrix& f = problem.label_features;
  if (x.cols() != f.cols()) throw Error(ErrorCode::DimMismatch, "image and label feature dims differ");
  if (problem.labels.rows() != x.rows() || problem.labels.cols() != f.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "labels must be images x classes");
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, options.init_scale);
  LinearHeadFit fit;
  fit.projection = Matrix(x.cols(), options.projection_dim);
  for (double& w : fit.projection.data()) w = normal(rng);
  double log_c = options.init_log_temperature;
  double bias = options.init_bias;

  for (std::size_t step = 0;; ++step) {
    const Matrix t_image = matmul(x, fit.projection);
    const Matrix t_label = matmul(f, fit.projection);
    const Matrix logits = matmul_transposed(t_image, t_label);
    const LossParams params{std::exp(log_c), bias};
    const auto g = siglip_loss_grad(logits, problem.labels, params);
    fit.losses.push_back(g.loss);
    fit.final_loss = g.loss;
    fit.params = params;
    fit.steps = step;
    if (g.loss < options.target_loss || step == options.max_steps) break;

    const auto eg = backprop_to_embeddings(g.d_logits, t_image, t_label);
    const Matrix dw_image = transposed_matmul(x, eg.d_image);
    const Matrix dw_label = transposed_matmul(f, eg.d_labels);
    auto w = fit.projection.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] -= options.learning_rate * (dw_image.data()[k] + dw_label.data()[k]);
    }
    log_c -= options.learning_rate * g.d_temperature * params.temperature;
    bias -= options.learning_rate * g.d_bias;
  }
  return fit;
}

}  // namespace latefrag::licn
