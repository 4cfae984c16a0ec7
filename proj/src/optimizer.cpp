#include "goalseq/optimizer.hpp"

#include <cmath>

namespace goalseq {

Optimizer::Optimizer(OptimizerConfig config, const ParamSet& params)
    : config_(config), first_(zeros_like(params)), second_(zeros_like(params)) {
  if (!(config_.learning_rate > 0.0)) throw ValidationError("optimizer: learning rate must be > 0");
}

void Optimizer::step(ParamSet& params, const GradSet& grads) {
  if (grads.size() != params.size() || first_.size() != params.size()) {
    throw ValidationError("optimizer: gradient set does not match parameters");
  }
  ++t_;
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (config_.kind == OptimizerConfig::Kind::sgd_momentum) {
      first_[i] = config_.momentum * first_[i] + grads[i];
      params[i] -= lr * first_[i];
    } else {
      first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * grads[i];
      second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * grads[i].cwiseProduct(grads[i]);
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
      params[i].array() -=
          lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + config_.epsilon);
    }
  }
}

}  // namespace goalseq
