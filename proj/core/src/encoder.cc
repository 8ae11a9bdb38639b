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

#include "reqaug/encoder.h"

#include <cmath>

#include "reqaug/error.h"

namespace reqaug {
namespace {

constexpr double kLayerNormEps = 1e-5;

Matrix row_zeros(int n) { return Matrix::Zero(1, n); }

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                  TransformerEncoder::LayerNormCache* cache) {
  const Eigen::Index rows = x.rows();
  const auto cols = static_cast<double>(x.cols());
  Matrix xhat(x.rows(), x.cols());
  Eigen::VectorXd rstd(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.row(r).sum() / cols;
    const double var = (x.row(r).array() - mu).square().sum() / cols;
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mu) * rstd(r);
  }
  Matrix y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() +
             beta.row(0).array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Matrix layer_norm_backward(const TransformerEncoder::LayerNormCache& cache,
                           const Matrix& dy, const Matrix& gamma,
                           Matrix& dgamma, Matrix& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  const auto cols = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / cols;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / cols;
    dx.row(r) = cache.rstd(r) *
                (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// dy -> dx, accumulating dw and db.
Matrix affine_backward(const Matrix& x, const Matrix& dy, const Matrix& w,
                       Matrix& dw, Matrix& db) {
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  return dy * w.transpose();
}

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0))); }

double gelu_grad(double u) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(u / std::sqrt(2.0))) +
         u * kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

void add_tensors(std::vector<NamedTensor>& out, const std::string& prefix,
                 std::initializer_list<std::pair<const char*, Matrix*>> items,
                 bool decay_weights) {
  for (const auto& [name, m] : items) {
    const std::string n = name;
    const bool is_weight = n.rfind("w", 0) == 0 || n.find("embedding") != std::string::npos;
    out.push_back({prefix + n, m, decay_weights && is_weight});
  }
}

}  // namespace

RowVector softmax(const RowVector& logits) {
  const double m = logits.maxCoeff();
  RowVector e = (logits.array() - m).exp();
  return e / e.sum();
}

EncoderParams EncoderParams::zeros(const EncoderShape& s) {
  EncoderParams p;
  p.token_embedding = Matrix::Zero(s.vocab_size, s.hidden);
  p.position_embedding = Matrix::Zero(s.max_positions, s.hidden);
  p.layers.resize(s.layers);
  for (auto& l : p.layers) {
    l.ln1_gamma = row_zeros(s.hidden);
    l.ln1_beta = row_zeros(s.hidden);
    l.wq = Matrix::Zero(s.hidden, s.hidden);
    l.wk = Matrix::Zero(s.hidden, s.hidden);
    l.wv = Matrix::Zero(s.hidden, s.hidden);
    l.wo = Matrix::Zero(s.hidden, s.hidden);
    l.bq = row_zeros(s.hidden);
    l.bk = row_zeros(s.hidden);
    l.bv = row_zeros(s.hidden);
    l.bo = row_zeros(s.hidden);
    l.ln2_gamma = row_zeros(s.hidden);
    l.ln2_beta = row_zeros(s.hidden);
    l.w1 = Matrix::Zero(s.hidden, s.ffn);
    l.b1 = row_zeros(s.ffn);
    l.w2 = Matrix::Zero(s.ffn, s.hidden);
    l.b2 = row_zeros(s.hidden);
  }
  p.final_gamma = row_zeros(s.hidden);
  p.final_beta = row_zeros(s.hidden);
  return p;
}

std::vector<NamedTensor> EncoderParams::tensors(const std::string& prefix) {
  std::vector<NamedTensor> out;
  add_tensors(out, prefix,
              {{"token_embedding", &token_embedding},
               {"position_embedding", &position_embedding}},
              true);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string p = prefix + "layer" + std::to_string(i) + ".";
    add_tensors(out, p,
                {{"ln1_gamma", &l.ln1_gamma}, {"ln1_beta", &l.ln1_beta},
                 {"wq", &l.wq}, {"bq", &l.bq}, {"wk", &l.wk}, {"bk", &l.bk},
                 {"wv", &l.wv}, {"bv", &l.bv}, {"wo", &l.wo}, {"bo", &l.bo},
                 {"ln2_gamma", &l.ln2_gamma}, {"ln2_beta", &l.ln2_beta},
                 {"w1", &l.w1}, {"b1", &l.b1}, {"w2", &l.w2}, {"b2", &l.b2}},
                true);
  }
  add_tensors(out, prefix,
              {{"final_gamma", &final_gamma}, {"final_beta", &final_beta}}, true);
  return out;
}

std::vector<ConstNamedTensor> EncoderParams::tensors(const std::string& prefix) const {
  std::vector<ConstNamedTensor> out;
  for (const auto& t : const_cast<EncoderParams*>(this)->tensors(prefix)) {
    out.push_back({t.name, t.value, t.decay});
  }
  return out;
}

LinearHead LinearHead::zeros(int in, int out) {
  return LinearHead{Matrix::Zero(in, out), Matrix::Zero(1, out)};
}

std::vector<NamedTensor> LinearHead::tensors(const std::string& prefix) {
  return {{prefix + "weight", &weight, true}, {prefix + "bias", &bias, false}};
}

std::vector<ConstNamedTensor> LinearHead::tensors(const std::string& prefix) const {
  return {{prefix + "weight", &weight, true}, {prefix + "bias", &bias, false}};
}

void init_normal(std::vector<NamedTensor> tensors, std::mt19937_64& rng,
                 double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& t : tensors) {
    const std::string& n = t.name;
    const auto leaf = n.substr(n.rfind('.') + 1);
    if (leaf.find("gamma") != std::string::npos) {
      t.value->setOnes();
    } else if (leaf.find("beta") != std::string::npos || leaf[0] == 'b') {
      t.value->setZero();
    } else {
      for (Eigen::Index i = 0; i < t.value->size(); ++i) {
        t.value->data()[i] = normal(rng);
      }
    }
  }
}

void set_zero(std::vector<NamedTensor> tensors) {
  for (auto& t : tensors) t.value->setZero();
}

void round_to_float(std::vector<NamedTensor> tensors) {
  for (auto& t : tensors) {
    *t.value = t.value->cast<float>().cast<double>();
  }
}

TransformerEncoder::TransformerEncoder(const EncoderShape& shape,
                                       std::mt19937_64& rng)
    : shape_(shape) {
  if (shape.hidden <= 0 || shape.heads <= 0 || shape.hidden % shape.heads != 0) {
    throw Error(ErrorCode::kInvalidConfig, "hidden must be a positive multiple of heads");
  }
  if (shape_.ffn == 0) shape_.ffn = 4 * shape_.hidden;
  params_ = EncoderParams::zeros(shape_);
  init_normal(params_.tensors(), rng);
}

Matrix TransformerEncoder::forward(std::span<const int> ids, Cache* cache) const {
  const auto T = static_cast<Eigen::Index>(ids.size());
  const int H = shape_.hidden;
  const int heads = shape_.heads;
  const int d = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  if (T > shape_.max_positions) {
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(T) + " positions exceed " + std::to_string(shape_.max_positions));
  }

  Matrix x(T, H);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= shape_.vocab_size) {
      throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
    }
    x.row(t) = params_.token_embedding.row(id) + params_.position_embedding.row(t);
  }
  if (cache != nullptr) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->layers.assign(params_.layers.size(), LayerCache{});
  }

  for (std::size_t li = 0; li < params_.layers.size(); ++li) {
    const LayerParams& p = params_.layers[li];
    LayerCache local;
    LayerCache& lc = cache != nullptr ? cache->layers[li] : local;

    lc.a = layer_norm(x, p.ln1_gamma, p.ln1_beta, &lc.ln1);
    lc.q = affine(lc.a, p.wq, p.bq);
    lc.k = affine(lc.a, p.wk, p.bk);
    lc.v = affine(lc.a, p.wv, p.bv);
    lc.context.resize(T, H);
    lc.probs.resize(heads);
    for (int h = 0; h < heads; ++h) {
      const auto qh = lc.q.middleCols(h * d, d);
      const auto kh = lc.k.middleCols(h * d, d);
      const auto vh = lc.v.middleCols(h * d, d);
      Matrix scores = (qh * kh.transpose()) * scale;
      for (Eigen::Index r = 0; r < T; ++r) scores.row(r) = softmax(scores.row(r));
      lc.context.middleCols(h * d, d).noalias() = scores * vh;
      lc.probs[h] = std::move(scores);
    }
    x += affine(lc.context, p.wo, p.bo);

    lc.c = layer_norm(x, p.ln2_gamma, p.ln2_beta, &lc.ln2);
    lc.u = affine(lc.c, p.w1, p.b1);
    lc.g = lc.u.unaryExpr([](double u) { return gelu(u); });
    x += affine(lc.g, p.w2, p.b2);
  }
  LayerNormCache final_local;
  return layer_norm(x, params_.final_gamma, params_.final_beta,
                    cache != nullptr ? &cache->final_ln : &final_local);
}

void TransformerEncoder::backward(const Cache& cache, const Matrix& d_hidden,
                                  EncoderParams& grads) const {
  const int H = shape_.hidden;
  const int heads = shape_.heads;
  const int d = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const auto T = static_cast<Eigen::Index>(cache.ids.size());

  // dx is the gradient with respect to the residual stream.
  Matrix dx = layer_norm_backward(cache.final_ln, d_hidden, params_.final_gamma,
                                  grads.final_gamma, grads.final_beta);

  for (std::size_t li = params_.layers.size(); li-- > 0;) {
    const LayerParams& p = params_.layers[li];
    LayerParams& g = grads.layers[li];
    const LayerCache& lc = cache.layers[li];

    // Feed-forward block.
    Matrix dg = affine_backward(lc.g, dx, p.w2, g.w2, g.b2);
    Matrix du = dg.array() * lc.u.unaryExpr([](double u) { return gelu_grad(u); }).array();
    Matrix dc = affine_backward(lc.c, du, p.w1, g.w1, g.b1);
    dx += layer_norm_backward(lc.ln2, dc, p.ln2_gamma, g.ln2_gamma, g.ln2_beta);

    // Attention block.
    Matrix dcontext = affine_backward(lc.context, dx, p.wo, g.wo, g.bo);
    Matrix dq(T, H), dk(T, H), dv(T, H);
    for (int h = 0; h < heads; ++h) {
      const Matrix& probs = lc.probs[h];
      const auto dch = dcontext.middleCols(h * d, d);
      Matrix dprobs = dch * lc.v.middleCols(h * d, d).transpose();
      dv.middleCols(h * d, d).noalias() = probs.transpose() * dch;
      Matrix dscores(T, T);
      for (Eigen::Index r = 0; r < T; ++r) {
        const double dot = dprobs.row(r).dot(probs.row(r));
        dscores.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
      }
      dscores *= scale;
      dq.middleCols(h * d, d).noalias() = dscores * lc.k.middleCols(h * d, d);
      dk.middleCols(h * d, d).noalias() = dscores.transpose() * lc.q.middleCols(h * d, d);
    }
    Matrix da = affine_backward(lc.a, dq, p.wq, g.wq, g.bq);
    da += affine_backward(lc.a, dk, p.wk, g.wk, g.bk);
    da += affine_backward(lc.a, dv, p.wv, g.wv, g.bv);
    dx += layer_norm_backward(lc.ln1, da, p.ln1_gamma, g.ln1_gamma, g.ln1_beta);
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    grads.token_embedding.row(cache.ids[static_cast<std::size_t>(t)]) += dx.row(t);
    grads.position_embedding.row(t) += dx.row(t);
  }
}

}  // namespace reqaug
