#include "adglab/sgd.hpp"

#include <cmath>

#include "adglab/common.hpp"

namespace adglab {

void SgdConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("SgdConfig: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ValidationError("SgdConfig: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ValidationError("SgdConfig: weight_decay must be >= 0");
    if (!(gradient_clip > 0.0)) throw ValidationError("SgdConfig: gradient_clip must be > 0");
}

void sgd_step(std::vector<Param*>& params, const SgdConfig& cfg, double sign,
              double lr_override) {
    const double lr = lr_override > 0.0 ? lr_override : cfg.learning_rate;

    double sq_norm = 0.0;
    for (Param* p : params) {
        if (!p->grad.same_shape(p->value))
            throw ValidationError("sgd_step: gradient shape mismatch for " + p->name);
        for (std::size_t i = 0; i < p->grad.v.size(); ++i) {
            const double g = p->grad.v[i] + cfg.weight_decay * p->value.v[i];
            sq_norm += g * g;
        }
    }
    const double norm = std::sqrt(sq_norm);
    const double clip_scale =
        (std::isfinite(cfg.gradient_clip) && norm > cfg.gradient_clip)
            ? cfg.gradient_clip / norm
            : 1.0;

    for (Param* p : params) {
        for (std::size_t i = 0; i < p->value.v.size(); ++i) {
            const double g = (p->grad.v[i] + cfg.weight_decay * p->value.v[i]) * clip_scale;
            p->momentum.v[i] = cfg.momentum * p->momentum.v[i] + g;
            p->value.v[i] -= sign * lr * p->momentum.v[i];
        }
        if (!p->value.all_finite())
            throw NumericError("sgd_step: non-finite parameter after update: " + p->name);
    }
}

}  // namespace adglab
