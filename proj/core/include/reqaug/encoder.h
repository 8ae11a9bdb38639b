//
// Copyright 2026 The reqaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef REQAUG_ENCODER_H_
#define REQAUG_ENCODER_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace reqaug {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

// A parameter tensor with its serialized name. `decay` marks tensors that
// take weight decay (weight matrices and embeddings).
struct NamedTensor {
  std::string name;
  Matrix* value;
  bool decay;
};
struct ConstNamedTensor {
  std::string name;
  const Matrix* value;
  bool decay;
};

struct EncoderShape {
  int vocab_size = 0;
  int hidden = 0;
  int heads = 1;
  int layers = 1;
  int max_positions = 0;
  int ffn = 0;  // feed-forward width, 4 * hidden by default
};

struct LayerParams {
  Matrix ln1_gamma, ln1_beta;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_gamma, ln2_beta;
  Matrix w1, b1, w2, b2;
};

struct EncoderParams {
  Matrix token_embedding;     // vocab x hidden
  Matrix position_embedding;  // max_positions x hidden
  std::vector<LayerParams> layers;
  Matrix final_gamma, final_beta;

  static EncoderParams zeros(const EncoderShape& shape);
  std::vector<NamedTensor> tensors(const std::string& prefix = "encoder.");
  std::vector<ConstNamedTensor> tensors(const std::string& prefix = "encoder.") const;
};

// A dense map hidden -> outputs applied row-wise (MLM output projection or
// the discriminator's class head).
struct LinearHead {
  Matrix weight;  // hidden x outputs
  Matrix bias;    // 1 x outputs

  static LinearHead zeros(int in, int out);
  std::vector<NamedTensor> tensors(const std::string& prefix);
  std::vector<ConstNamedTensor> tensors(const std::string& prefix) const;
};

void init_normal(std::vector<NamedTensor> tensors, std::mt19937_64& rng,
                 double stddev = 0.02);
void set_zero(std::vector<NamedTensor> tensors);
// Rounds every value to the nearest float so in-memory weights equal what
// the float32 weight file stores.
void round_to_float(std::vector<NamedTensor> tensors);

// Pre-layer-norm transformer encoder with learned positions and an exact GELU
// feed-forward. Sequences are processed one at a time without padding.
class TransformerEncoder {
 public:
  struct LayerNormCache {
    Matrix xhat;
    Eigen::VectorXd rstd;
  };
  struct LayerCache {
    LayerNormCache ln1;
    Matrix a;  // ln1 output
    Matrix q, k, v;
    std::vector<Matrix> probs;  // attention weights per head
    Matrix context;             // concatenated heads before the output map
    LayerNormCache ln2;
    Matrix c;  // ln2 output
    Matrix u;  // pre-activation
    Matrix g;  // GELU(u)
  };
  struct Cache {
    std::vector<int> ids;
    std::vector<LayerCache> layers;
    LayerNormCache final_ln;
  };

  TransformerEncoder() = default;
  // Weights drawn from N(0, 0.02); biases zero, norm gains one.
  TransformerEncoder(const EncoderShape& shape, std::mt19937_64& rng);

  const EncoderShape& shape() const { return shape_; }
  EncoderParams& params() { return params_; }
  const EncoderParams& params() const { return params_; }

  // Final-layer hidden states, one row per position. `cache` may be null.
  Matrix forward(std::span<const int> ids, Cache* cache) const;

  // Accumulates parameter gradients of a loss whose gradient with respect to
  // the final hidden states is `d_hidden`.
  void backward(const Cache& cache, const Matrix& d_hidden,
                EncoderParams& grads) const;

 private:
  EncoderShape shape_;
  EncoderParams params_;
};

// Softmax of one row of logits, shifted for stability.
RowVector softmax(const RowVector& logits);

}  // namespace reqaug

#endif  // REQAUG_ENCODER_H_
