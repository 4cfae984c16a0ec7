#pragma once

#include "goalseq/nn.hpp"

namespace goalseq {

struct OptimizerConfig {
  enum class Kind { sgd_momentum, adam };
  Kind kind = Kind::sgd_momentum;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // sgd_momentum
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerConfig sgd(double lr, double momentum = 0.9) {
    return {Kind::sgd_momentum, lr, momentum, 0.9, 0.999, 1e-8};
  }
  static OptimizerConfig adam(double lr) { return {Kind::adam, lr, 0.9, 0.9, 0.999, 1e-8}; }
};

/// Descent step on a ParamSet; state buffers follow the ParamSet order.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const ParamSet& params);
  void step(ParamSet& params, const GradSet& grads);
  long steps_taken() const { return t_; }

 private:
  OptimizerConfig config_;
  GradSet first_;
  GradSet second_;
  long t_ = 0;
};

}  // namespace goalseq
