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

#ifndef REQAUG_OPTIMIZER_H_
#define REQAUG_OPTIMIZER_H_

#include <cstddef>
#include <vector>

#include "reqaug/encoder.h"

namespace reqaug {

// Adam with decoupled weight decay. Moments live alongside the parameter
// list given at construction; gradients must arrive in the same order.
class AdamW {
 public:
  AdamW(std::vector<NamedTensor> params, double weight_decay,
        double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(const std::vector<NamedTensor>& grads, double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  std::vector<NamedTensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
};

// Linear warmup to the peak rate, then linear decay towards zero.
class LinearWarmupSchedule {
 public:
  LinearWarmupSchedule(double peak, std::size_t total_steps, double warmup_fraction);

  // `step` counts from zero.
  double rate(std::size_t step) const;
  std::size_t warmup_steps() const { return warmup_; }

 private:
  double peak_;
  std::size_t total_;
  std::size_t warmup_;
};

}  // namespace reqaug

#endif  // REQAUG_OPTIMIZER_H_
