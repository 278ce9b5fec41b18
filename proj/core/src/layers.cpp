// Copyright (c) 2026 The nsvsynth Authors
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
#include "nsv/layers.hpp"

#include <cmath>
#include <numbers>

#include "nsv/error.hpp"

namespace nsv::nn {

Tensor& ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  require(find(name) == nullptr, "duplicate parameter name: " + name);
  auto& t = tensors_.emplace_back();
  t.name = std::move(name);
  t.value = Matrix::Zero(rows, cols);
  t.grad = Matrix::Zero(rows, cols);
  return t;
}

Tensor* ParamStore::find(const std::string& name) {
  for (auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Tensor* ParamStore::find(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

void init_normal(Tensor& t, double stddev, Rng& rng) {
  for (Eigen::Index i = 0; i < t.value.size(); ++i) {
    t.value.data()[i] = rng.normal(0.0, stddev);
  }
}

// --- Linear -----------------------------------------------------------------

Linear::Linear(ParamStore& store, const std::string& name, int in, int out)
    : weight_(&store.add(name + ".weight", in, out)),
      bias_(&store.add(name + ".bias", 1, out)) {}

void Linear::init(Rng& rng) {
  init_normal(*weight_, 1.0 / std::sqrt(static_cast<double>(weight_->value.rows())), rng);
  bias_->value.setZero();
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = x * weight_->value;
  y.rowwise() += bias_->value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) const {
  weight_->grad.noalias() += x.transpose() * dy;
  bias_->grad.row(0) += dy.colwise().sum();
  return dy * weight_->value.transpose();
}

// --- Conv1d -----------------------------------------------------------------

Conv1d::Conv1d(ParamStore& store, const std::string& name, int in, int out,
               int kernel, int dilation)
    : weight_(&store.add(name + ".weight", static_cast<Eigen::Index>(kernel) * in, out)),
      bias_(&store.add(name + ".bias", 1, out)),
      in_(in),
      kernel_(kernel),
      dilation_(dilation) {
  require(kernel > 0 && kernel % 2 == 1, "conv: kernel size must be odd");
  require(dilation > 0, "conv: dilation must be positive");
}

void Conv1d::init(Rng& rng) {
  init_normal(*weight_, 1.0 / std::sqrt(static_cast<double>(weight_->value.rows())), rng);
  bias_->value.setZero();
}

Matrix Conv1d::forward(const Matrix& x) const {
  const Eigen::Index t_len = x.rows();
  Matrix y(t_len, weight_->value.cols());
  y.rowwise() = bias_->value.row(0);
  const int half = (kernel_ - 1) / 2;
  for (int k = 0; k < kernel_; ++k) {
    const Eigen::Index shift = static_cast<Eigen::Index>(k - half) * dilation_;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index t1 = std::min(t_len, t_len - shift);
    if (t1 <= t0) continue;
    y.middleRows(t0, t1 - t0).noalias() +=
        x.middleRows(t0 + shift, t1 - t0) * weight_->value.middleRows(k * in_, in_);
  }
  return y;
}

Matrix Conv1d::backward(const Matrix& x, const Matrix& dy) const {
  const Eigen::Index t_len = x.rows();
  Matrix dx = Matrix::Zero(t_len, in_);
  const int half = (kernel_ - 1) / 2;
  for (int k = 0; k < kernel_; ++k) {
    const Eigen::Index shift = static_cast<Eigen::Index>(k - half) * dilation_;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index t1 = std::min(t_len, t_len - shift);
    if (t1 <= t0) continue;
    const auto w_k = weight_->value.middleRows(k * in_, in_);
    weight_->grad.middleRows(k * in_, in_).noalias() +=
        x.middleRows(t0 + shift, t1 - t0).transpose() * dy.middleRows(t0, t1 - t0);
    dx.middleRows(t0 + shift, t1 - t0).noalias() +=
        dy.middleRows(t0, t1 - t0) * w_k.transpose();
  }
  bias_->grad.row(0) += dy.colwise().sum();
  return dx;
}

// --- LayerNorm --------------------------------------------------------------

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, int channels)
    : gamma_(&store.add(name + ".gamma", 1, channels)),
      beta_(&store.add(name + ".beta", 1, channels)) {}

void LayerNorm::init() {
  gamma_->value.setOnes();
  beta_->value.setZero();
}

Matrix LayerNorm::forward(const Matrix& x, Cache& cache) const {
  const auto c = static_cast<double>(x.cols());
  cache.normalized.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double mean = x.row(t).sum() / c;
    const RowVector centred = x.row(t).array() - mean;
    const double var = centred.squaredNorm() / c;
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    cache.inv_std(t) = inv;
    cache.normalized.row(t) = centred * inv;
  }
  Matrix y = cache.normalized.array().rowwise() * gamma_->value.row(0).array();
  y.rowwise() += beta_->value.row(0);
  return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) const {
  const auto c = static_cast<double>(dy.cols());
  gamma_->grad.row(0) += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  beta_->grad.row(0) += dy.colwise().sum();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const RowVector dxhat = dy.row(t).array() * gamma_->value.row(0).array();
    const double mean_d = dxhat.sum() / c;
    const double mean_dx = dxhat.dot(cache.normalized.row(t)) / c;
    dx.row(t) = cache.inv_std(t) *
                (dxhat.array() - mean_d - cache.normalized.row(t).array() * mean_dx).matrix();
  }
  return dx;
}

// --- GELU / dropout ---------------------------------------------------------

constexpr double kInvSqrt2 = 0.5 * std::numbers::sqrt2;

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  });
}

Matrix gelu_backward(const Matrix& x, const Matrix& dy) {
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  Matrix d = x.unaryExpr([inv_sqrt_2pi](double v) {
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
    return cdf + v * pdf;
  });
  return d.cwiseProduct(dy);
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return Matrix::Ones(rows, cols);
  require(p < 1.0, "dropout rate must be below 1");
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng->uniform() < p ? 0.0 : keep;
  }
  return m;
}

// --- Embedding --------------------------------------------------------------

Embedding::Embedding(ParamStore& store, const std::string& name, int count, int dim)
    : table_(&store.add(name, count, dim)) {}

void Embedding::init(double stddev, Rng& rng) { init_normal(*table_, stddev, rng); }

Matrix Embedding::forward(const std::vector<int>& ids) const {
  Matrix y(static_cast<Eigen::Index>(ids.size()), table_->value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table_->value.rows()) {
      fail(ErrorCode::kInvalidArgument, table_->name + ": index " +
                                            std::to_string(ids[i]) + " out of range");
    }
    y.row(static_cast<Eigen::Index>(i)) = table_->value.row(ids[i]);
  }
  return y;
}

void Embedding::backward(const std::vector<int>& ids, const Matrix& dy) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    table_->grad.row(ids[i]) += dy.row(static_cast<Eigen::Index>(i));
  }
}

// --- ResidualConvBlock ------------------------------------------------------

ResidualConvBlock::ResidualConvBlock(ParamStore& store, const std::string& name,
                                     int channels, int kernel, int dilation)
    : conv_(store, name + ".conv", channels, channels, kernel, dilation),
      norm_(store, name + ".norm", channels) {}

void ResidualConvBlock::init(Rng& rng) {
  conv_.init(rng);
  norm_.init();
}

Matrix ResidualConvBlock::forward(const Matrix& x, double dropout, Rng* rng,
                                  Cache& cache) const {
  cache.input = x;
  cache.conv_out = conv_.forward(x);
  cache.norm_out = norm_.forward(cache.conv_out, cache.norm);
  cache.mask = dropout_mask(x.rows(), x.cols(), dropout, rng);
  return x + gelu(cache.norm_out).cwiseProduct(cache.mask);
}

Matrix ResidualConvBlock::backward(const Cache& cache, const Matrix& dy) const {
  Matrix d = gelu_backward(cache.norm_out, dy.cwiseProduct(cache.mask));
  d = norm_.backward(cache.norm, d);
  return dy + conv_.backward(cache.input, d);
}

}  // namespace nsv::nn
