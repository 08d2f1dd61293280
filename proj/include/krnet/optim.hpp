#pragma once

#include <cstdint>
#include <vector>

#include "krnet/layers.hpp"
#include "krnet/rng.hpp"
#include "krnet/tensor.hpp"

namespace krnet {

// Log-linear learning-rate decay: lr(e) = lr_start * (lr_end/lr_start)^(e/T),
// with the endpoints exact.
struct LrSchedule {
    double lr_start = 1e-1;
    double lr_end = 1e-4;
    int total_epochs = 50;

    void validate() const;
};

double lr_at(const LrSchedule& schedule, int epoch);

struct LossGrad {
    double loss = 0.0;
    Tensor4 grad;
};

// Mean squared error over all elements; grad = 2 (pred - target) / count.
LossGrad mse_loss(const Tensor4& pred, const Tensor4& target);

// He initialization: i.i.d. zero-mean Gaussians with variance 2 / fan_in.
std::vector<double> he_init(std::size_t fan_in, std::size_t count, Rng& rng);

// One SGD step with momentum and weight decay:
//   g <- grad + weight_decay * value;  buf <- momentum * buf + g;
//   value <- value - lr * buf
// then gradients are zeroed. With decay_all unset, weight decay applies to
// conv weights only.
void sgd_step(const std::vector<Param*>& params, double lr, double momentum, double weight_decay,
              bool decay_all = true);

}  // namespace krnet
