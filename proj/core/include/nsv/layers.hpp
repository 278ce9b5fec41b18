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
#pragma once

#include <deque>
#include <string>
#include <vector>

#include "nsv/features.hpp"
#include "nsv/random.hpp"

// Minimal layers with hand-written backward passes. Activations are
// (time x channels) row-major matrices; every layer is applied to one
// utterance at a time, so no padding masks are needed inside the network.
namespace nsv::nn {

using Matrix = RowMatrix;
using RowVector = Eigen::RowVectorXd;

struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Owns every trainable tensor. References stay valid as tensors are added.
class ParamStore {
 public:
  Tensor& add(std::string name, Eigen::Index rows, Eigen::Index cols);
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
  void zero_grad();
  std::size_t parameter_count() const;

  std::deque<Tensor>& tensors() { return tensors_; }
  const std::deque<Tensor>& tensors() const { return tensors_; }

 private:
  std::deque<Tensor> tensors_;
};

void init_normal(Tensor& t, double stddev, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out);

  void init(Rng& rng);
  Matrix forward(const Matrix& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy) const;

 private:
  Tensor* weight_ = nullptr;  // in x out
  Tensor* bias_ = nullptr;    // 1 x out
};

/// "Same"-length dilated 1-D convolution with zero padding.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& name, int in, int out,
         int kernel, int dilation);

  void init(Rng& rng);
  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy) const;

  int dilation() const { return dilation_; }

 private:
  Tensor* weight_ = nullptr;  // (kernel * in) x out, tap-major
  Tensor* bias_ = nullptr;
  int in_ = 0;
  int kernel_ = 0;
  int dilation_ = 1;
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, int channels);

  void init();
  Matrix forward(const Matrix& x, Cache& cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy) const;

  static constexpr double kEpsilon = 1e-5;

 private:
  Tensor* gamma_ = nullptr;
  Tensor* beta_ = nullptr;
};

Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& dy);

/// Inverted dropout mask (entries 0 or 1/(1-p)); all ones when p == 0.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng);

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamStore& store, const std::string& name, int count, int dim);

  void init(double stddev, Rng& rng);
  Matrix forward(const std::vector<int>& ids) const;
  void backward(const std::vector<int>& ids, const Matrix& dy) const;
  Eigen::Index count() const { return table_->value.rows(); }
  const Tensor& table() const { return *table_; }

 private:
  Tensor* table_ = nullptr;
};

/// x + dropout(gelu(layernorm(conv(x)))).
class ResidualConvBlock {
 public:
  struct Cache {
    Matrix input;
    Matrix conv_out;
    LayerNorm::Cache norm;
    Matrix norm_out;
    Matrix mask;
  };

  ResidualConvBlock() = default;
  ResidualConvBlock(ParamStore& store, const std::string& name, int channels,
                    int kernel, int dilation);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, double dropout, Rng* rng, Cache& cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy) const;

 private:
  Conv1d conv_;
  LayerNorm norm_;
};

}  // namespace nsv::nn
