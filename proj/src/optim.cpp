#include "krnet/optim.hpp"

#include <cmath>
#include <string>

#include "krnet/error.hpp"

namespace krnet {

void LrSchedule::validate() const {
    if (!(lr_end > 0.0) || !(lr_end <= lr_start))
        throw ConfigError("learning rate schedule needs 0 < lr_end <= lr_start");
    if (total_epochs < 1) throw ConfigError("learning rate schedule needs total_epochs >= 1");
}

double lr_at(const LrSchedule& schedule, int epoch) {
    schedule.validate();
    if (epoch < 0 || epoch > schedule.total_epochs)
        throw ConfigError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(schedule.total_epochs) + "]");
    // Endpoints are exact by construction, not subject to pow() rounding.
    if (epoch == 0) return schedule.lr_start;
    if (epoch == schedule.total_epochs) return schedule.lr_end;
    const double t = static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs);
    return schedule.lr_start * std::pow(schedule.lr_end / schedule.lr_start, t);
}

LossGrad mse_loss(const Tensor4& pred, const Tensor4& target) {
    require_same_shape(pred, target, "mse_loss");
    LossGrad lg;
    lg.grad = Tensor4::zeros_like(pred);
    const double count = static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        sum += d * d;
        lg.grad.v[i] = 2.0 * d / count;
    }
    lg.loss = sum / count;
    return lg;
}

std::vector<double> he_init(std::size_t fan_in, std::size_t count, Rng& rng) {
    if (fan_in == 0) throw ConfigError("he_init: fan_in must be positive");
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<double> out(count);
    for (double& x : out) x = std_dev * rng.gaussian();
    return out;
}

void sgd_step(const std::vector<Param*>& params, double lr, double momentum, double weight_decay,
              bool decay_all) {
    for (Param* p : params) {
        const bool decay = weight_decay != 0.0 && (decay_all || p->kind == ParamKind::ConvWeight);
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double g = p->grad[i] + (decay ? weight_decay * p->value[i] : 0.0);
            p->momentum[i] = momentum * p->momentum[i] + g;
            p->value[i] -= lr * p->momentum[i];
        }
        p->zero_grad();
    }
}

}  // namespace krnet
