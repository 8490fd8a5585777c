#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sdg/core_math.hpp"

namespace sdg {

class Rng;

enum class LossKind { kSquaredError, kSoftmaxCrossEntropy };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// A batch of samples from one domain. `targets` is used by squared error,
/// `labels` (class indices) by cross-entropy; a batch may carry both.
struct DomainBatch {
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> labels;
  int domain_id = 0;

  std::size_t size() const noexcept { return inputs.rows(); }
};

/// Rows `indices` of `batch`, in the given order (repeats allowed).
DomainBatch select_rows(const DomainBatch& batch, const std::vector<std::size_t>& indices);

/// Activations cached by MlpModel::forward for backpropagation.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = inputs, back() = outputs

  const Matrix& outputs() const { return activations.back(); }
  /// Penultimate-layer activations (post-ReLU); the inputs when there is no hidden layer.
  const Matrix& features() const { return activations[activations.size() - 2]; }
};

/// Fully-connected network: ReLU on hidden layers, identity on the output.
///
/// All weights and biases live in one flat ParamVector. Layer l occupies
/// `out*in` row-major weights (W[o][i]) followed by `out` biases.
class MlpModel {
 public:
  MlpModel(std::vector<std::size_t> layer_dims, LossKind loss);

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  void initialize(Rng& rng);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  LossKind loss_kind() const noexcept { return loss_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.back(); }
  std::size_t feature_dim() const noexcept { return dims_[dims_.size() - 2]; }
  std::size_t num_params() const noexcept { return theta_.size(); }

  const ParamVector& params() const noexcept { return theta_; }
  void set_params(ParamVector theta);

  ForwardCache forward(const Matrix& inputs) const;

  /// Backpropagates upstream gradients on the outputs and (optionally) on the
  /// penultimate features into a gradient over the flat parameters.
  ParamVector backward(const ForwardCache& cache, const Matrix* d_outputs, const Matrix* d_features) const;

  /// Mean per-sample loss. Squared error uses 1/2 * sum_k (yhat_k - y_k)^2.
  double loss(const Matrix& outputs, const DomainBatch& batch) const;
  /// d(mean loss)/d(outputs).
  Matrix loss_output_grad(const Matrix& outputs, const DomainBatch& batch) const;

  /// Fraction of correctly classified samples (argmax for cross-entropy,
  /// sign agreement for a single squared-error output).
  double accuracy(const Matrix& outputs, const DomainBatch& batch) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  void check_batch(const DomainBatch& batch) const;

  std::vector<std::size_t> dims_;
  LossKind loss_;
  std::vector<std::size_t> offsets_;
  ParamVector theta_;
};

struct ForwardResult {
  Matrix outputs;
  Matrix features;
};

ForwardResult forward(const MlpModel& model, const Matrix& inputs);
double domain_loss(const MlpModel& model, const DomainBatch& batch);
ParamVector domain_grad(const MlpModel& model, const DomainBatch& batch);

}  // namespace sdg
