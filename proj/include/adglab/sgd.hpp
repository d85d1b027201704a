#pragma once

#include <string>
#include <vector>

#include "adglab/tensor.hpp"

namespace adglab {

// Defaults follow the reference training setup: lr 0.001, momentum 0.9,
// weight decay 0.0005, gradients clipped to global norm 1.
struct SgdConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    double gradient_clip = 1.0;

    void validate() const;
};

// A named trainable tensor with its gradient and momentum buffers.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;      // filled from the tape after backward
    Tensor momentum;  // same shape as value, lazily initialised

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor(value.rows, value.cols);
        momentum = Tensor(value.rows, value.cols);
    }

    void zero_grad() {
        for (double& e : grad.v) e = 0.0;
    }
};

// One SGD step over a parameter group. Order of operations: weight decay is
// added to the gradient, the total gradient norm across the whole group is
// clipped to cfg.gradient_clip, momentum buffers are updated, and parameters
// move by sign * lr * buffer. sign = +1 descends (minimise), sign = -1
// ascends (maximise), which is how discriminator updates are realised.
void sgd_step(std::vector<Param*>& params, const SgdConfig& cfg, double sign = 1.0,
              double lr_override = -1.0);

}  // namespace adglab
