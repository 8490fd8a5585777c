#include "sdg/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

namespace sdg {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared_error") return LossKind::kSquaredError;
  if (name == "cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  throw ParameterError("unknown loss '" + std::string(name) + "' (expected squared_error|cross_entropy)");
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kSquaredError ? "squared_error" : "cross_entropy";
}

DomainBatch select_rows(const DomainBatch& batch, const std::vector<std::size_t>& indices) {
  DomainBatch out;
  out.domain_id = batch.domain_id;
  out.inputs = Matrix(indices.size(), batch.inputs.cols());
  if (batch.targets.rows() > 0) out.targets = Matrix(indices.size(), batch.targets.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    if (src >= batch.size()) throw DimensionError("select_rows: index out of range");
    std::copy_n(batch.inputs.row(src).begin(), batch.inputs.cols(), out.inputs.row(r).begin());
    if (batch.targets.rows() > 0)
      std::copy_n(batch.targets.row(src).begin(), batch.targets.cols(), out.targets.row(r).begin());
    if (!batch.labels.empty()) out.labels.push_back(batch.labels[src]);
  }
  return out;
}

MlpModel::MlpModel(std::vector<std::size_t> layer_dims, LossKind loss) : dims_(std::move(layer_dims)), loss_(loss) {
  if (dims_.size() < 2) throw DimensionError("MlpModel: need at least input and output dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw DimensionError("MlpModel: zero-width layer");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l] * dims_[l + 1] + dims_[l + 1];
  }
  theta_ = ParamVector(total);
}

void MlpModel::initialize(Rng& rng) {
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    const std::size_t count = dims_[l] * dims_[l + 1] + dims_[l + 1];
    for (std::size_t i = 0; i < count; ++i) theta_[offsets_[l] + i] = rng.uniform(-bound, bound);
  }
}

void MlpModel::set_params(ParamVector theta) {
  if (theta.size() != theta_.size()) {
    throw DimensionError("set_params: expected " + std::to_string(theta_.size()) + " parameters, got " +
                         std::to_string(theta.size()));
  }
  theta_ = std::move(theta);
}

ForwardCache MlpModel::forward(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                         std::to_string(input_dim()));
  }
  const std::size_t batch = inputs.rows();
  const std::size_t layers = dims_.size() - 1;
  ForwardCache cache;
  cache.activations.reserve(dims_.size());
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = theta_.span().data() + offsets_[l];
    const double* b = w + in * out;
    const Matrix& a = cache.activations.back();
    Matrix z(batch, out);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += w[o * in + i] * a(r, i);
        z(r, o) = (l + 1 < layers) ? std::max(s, 0.0) : s;
      }
    }
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

ParamVector MlpModel::backward(const ForwardCache& cache, const Matrix* d_outputs, const Matrix* d_features) const {
  const std::size_t layers = dims_.size() - 1;
  const std::size_t batch = cache.activations.front().rows();
  ParamVector grad(theta_.size());

  // Gradient w.r.t. activations[layers].
  Matrix upstream(batch, output_dim());
  if (d_outputs != nullptr) upstream = *d_outputs;

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = theta_.span().data() + offsets_[l];
    double* gw = grad.span().data() + offsets_[l];
    double* gb = gw + in * out;
    const Matrix& a_in = cache.activations[l];
    const Matrix& a_out = cache.activations[l + 1];

    Matrix delta = std::move(upstream);
    if (l + 1 == layers - 1 && d_features != nullptr) {
      for (std::size_t i = 0; i < delta.data().size(); ++i) delta.data()[i] += d_features->data()[i];
    }
    if (l + 1 < layers) {
      for (std::size_t i = 0; i < delta.data().size(); ++i) {
        if (a_out.data()[i] <= 0.0) delta.data()[i] = 0.0;
      }
    }
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = delta(r, o);
        if (dv == 0.0) continue;
        gb[o] += dv;
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += dv * a_in(r, i);
      }
    }
    if (l == 0) break;
    upstream = Matrix(batch, in);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = delta(r, o);
        if (dv == 0.0) continue;
        for (std::size_t i = 0; i < in; ++i) upstream(r, i) += dv * w[o * in + i];
      }
    }
  }
  return grad;
}

void MlpModel::check_batch(const DomainBatch& batch) const {
  if (batch.size() == 0) throw InsufficientDataError("empty batch");
  if (loss_ == LossKind::kSquaredError) {
    if (batch.targets.rows() != batch.size() || batch.targets.cols() != output_dim())
      throw DimensionError("squared-error batch needs a B x k target matrix");
  } else {
    if (batch.labels.size() != batch.size()) throw DimensionError("cross-entropy batch needs one label per row");
    for (std::size_t y : batch.labels) {
      if (y >= output_dim()) throw DimensionError("class label out of range");
    }
  }
}

double MlpModel::loss(const Matrix& outputs, const DomainBatch& batch) const {
  check_batch(batch);
  const std::size_t n = batch.size();
  const std::size_t k = output_dim();
  std::vector<double> per_sample(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    if (loss_ == LossKind::kSquaredError) {
      for (std::size_t c = 0; c < k; ++c) {
        const double e = outputs(r, c) - batch.targets(r, c);
        per_sample[r] += 0.5 * e * e;
      }
    } else {
      double m = outputs(r, 0);
      for (std::size_t c = 1; c < k; ++c) m = std::max(m, outputs(r, c));
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(outputs(r, c) - m);
      per_sample[r] = m + std::log(z) - outputs(r, batch.labels[r]);
    }
  }
  return sorted_sum(std::move(per_sample)) / static_cast<double>(n);
}

Matrix MlpModel::loss_output_grad(const Matrix& outputs, const DomainBatch& batch) const {
  check_batch(batch);
  const std::size_t n = batch.size();
  const std::size_t k = output_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix g(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    if (loss_ == LossKind::kSquaredError) {
      for (std::size_t c = 0; c < k; ++c) g(r, c) = (outputs(r, c) - batch.targets(r, c)) * inv_n;
    } else {
      double m = outputs(r, 0);
      for (std::size_t c = 1; c < k; ++c) m = std::max(m, outputs(r, c));
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(outputs(r, c) - m);
      for (std::size_t c = 0; c < k; ++c) {
        const double p = std::exp(outputs(r, c) - m) / z;
        g(r, c) = (p - (c == batch.labels[r] ? 1.0 : 0.0)) * inv_n;
      }
    }
  }
  return g;
}

double MlpModel::accuracy(const Matrix& outputs, const DomainBatch& batch) const {
  check_batch(batch);
  const std::size_t n = batch.size();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (loss_ == LossKind::kSoftmaxCrossEntropy) {
      const auto row = outputs.row(r);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == batch.labels[r]) ++correct;
    } else {
      if ((outputs(r, 0) >= 0.0) == (batch.targets(r, 0) >= 0.0)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

ForwardResult forward(const MlpModel& model, const Matrix& inputs) {
  ForwardCache cache = model.forward(inputs);
  ForwardResult out;
  out.features = cache.features();
  out.outputs = std::move(cache.activations.back());
  return out;
}

double domain_loss(const MlpModel& model, const DomainBatch& batch) {
  const ForwardCache cache = model.forward(batch.inputs);
  return model.loss(cache.outputs(), batch);
}

ParamVector domain_grad(const MlpModel& model, const DomainBatch& batch) {
  const ForwardCache cache = model.forward(batch.inputs);
  const Matrix d_out = model.loss_output_grad(cache.outputs(), batch);
  return model.backward(cache, &d_out, nullptr);
}

}  // namespace sdg
