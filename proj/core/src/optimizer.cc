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

#include "reqaug/optimizer.h"

#include <algorithm>
#include <cmath>

#include "reqaug/error.h"

namespace reqaug {

AdamW::AdamW(std::vector<NamedTensor> params, double weight_decay, double beta1,
             double beta2, double eps)
    : params_(std::move(params)),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
  }
}

void AdamW::step(const std::vector<NamedTensor>& grads, double learning_rate) {
  if (grads.size() != params_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient list does not match parameters");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& w = *params_[i].value;
    const Matrix& g = *grads[i].value;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    if (params_[i].decay && weight_decay_ > 0.0) {
      w *= 1.0 - learning_rate * weight_decay_;
    }
    w.array() -= learning_rate * (m_[i].array() / c1) /
                 ((v_[i].array() / c2).sqrt() + eps_);
  }
}

LinearWarmupSchedule::LinearWarmupSchedule(double peak, std::size_t total_steps,
                                           double warmup_fraction)
    : peak_(peak),
      total_(std::max<std::size_t>(total_steps, 1)),
      warmup_(static_cast<std::size_t>(
          std::floor(warmup_fraction * static_cast<double>(total_steps)))) {}

double LinearWarmupSchedule::rate(std::size_t step) const {
  if (step < warmup_) {
    return peak_ * static_cast<double>(step + 1) / static_cast<double>(warmup_);
  }
  if (step >= total_) return 0.0;
  return peak_ * static_cast<double>(total_ - step) /
         static_cast<double>(total_ - warmup_);
}

}  // namespace reqaug
