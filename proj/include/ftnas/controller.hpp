#pragma once

#include <vector>

#include "ftnas/graph.hpp"
#include "ftnas/optim.hpp"

namespace ftnas {

struct ControllerSpec {
  SpaceSpec space;
  int hidden_size = 100;
  int embed_size = 32;
  double lr = 1e-3;
  double baseline_momentum = 0.99;
  double entropy_coef = 0.01;
};

struct SampledRollout {
  Rollout rollout;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Recurrent architecture sampler: one LSTM layer, shared hidden state,
// separate softmax heads for input and operation decisions. Heads start at
// zero so the initial policy is exactly uniform.
class Controller {
 public:
  Controller(ControllerSpec spec, uint64_t seed);

  const ControllerSpec& spec() const { return spec_; }
  ParamStore& store() { return store_; }

  // Autoregressively samples one rollout: per node, two input choices then
  // two primitive choices, normal cell first.
  SampledRollout sample(SequentialRng& rng);

  // Greedy decoding (temperature -> 0): deterministic given the state.
  Rollout argmax();

  // Teacher-forced re-evaluation of log pi(a) and entropy on a rollout.
  SampledRollout replay(const Rollout& rollout);

  // One REINFORCE ascent step with moving-average baseline and entropy
  // bonus. Non-finite rewards are skipped (returns false).
  bool reinforce_step(const Rollout& rollout, double reward);

  double baseline() const { return baseline_; }
  int64_t steps() const { return steps_; }

  // Per-decision softmax tables along the greedy trajectory, for inspection.
  std::vector<std::vector<double>> decision_tables();

 private:
  struct StepResult;
  ControllerSpec spec_;
  ParamStore store_;
  Adam opt_;
  double baseline_ = 0.0;
  bool baseline_init_ = false;
  int64_t steps_ = 0;
};

}  // namespace ftnas
