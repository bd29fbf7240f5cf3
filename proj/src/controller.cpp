#include "ftnas/controller.hpp"

#include <cmath>

#include "ftnas/check.hpp"

namespace ftnas {

namespace {

// Row lookup into an embedding table with scatter backward.
Var embed_row(Tape& tape, Var table, int64_t row) {
  const Tensor& tv = tape.value(table);
  const int64_t V = tv.dim(0), E = tv.dim(1);
  FTNAS_CHECK(row >= 0 && row < V, "embedding row out of range");
  Tensor out({1, E});
  double* op = out.mutable_data();
  for (int64_t e = 0; e < E; ++e) op[e] = tv[row * E + e];
  return tape.record(std::move(out), {table}, [=](Tape& tp, const Tensor& gy) {
    Tensor g({V, E});
    double* gp = g.mutable_data();
    for (int64_t e = 0; e < E; ++e) gp[row * E + e] = gy[e];
    tp.accumulate(table, std::move(g));
  });
}

struct LstmState {
  Var h;
  Var c;
};

struct ControllerNet {
  Var emb_start, emb_in, emb_op;
  Var wx, wh, b;
  Var head_in_w, head_in_b, head_op_w, head_op_b;
  int64_t H;

  static ControllerNet bind(Tape& tape, ParamStore& store, int64_t H) {
    auto p = [&](const char* n) { return tape.param(n, store.params().at(n)); };
    return ControllerNet{p("ctrl/emb_start"), p("ctrl/emb_in"),
                         p("ctrl/emb_op"),    p("ctrl/lstm/wx"),
                         p("ctrl/lstm/wh"),   p("ctrl/lstm/b"),
                         p("ctrl/head_in/w"), p("ctrl/head_in/b"),
                         p("ctrl/head_op/w"), p("ctrl/head_op/b"),
                         H};
  }

  LstmState step(Tape& tape, Var x, const LstmState& s) const {
    Var z = ops::add(ops::linear(x, wx, b), ops::linear(s.h, wh, Var{}));
    Var i = ops::sigmoid(ops::slice_cols(z, 0, H));
    Var f = ops::sigmoid(ops::slice_cols(z, H, 2 * H));
    Var g = ops::tanh(ops::slice_cols(z, 2 * H, 3 * H));
    Var o = ops::sigmoid(ops::slice_cols(z, 3 * H, 4 * H));
    Var c = ops::add(ops::mul(f, s.c), ops::mul(i, g));
    Var h = ops::mul(o, ops::tanh(c));
    return {h, c};
  }
};

enum class Decode { Sample, Greedy, Forced };

}  // namespace

struct Controller::StepResult {
  Rollout rollout;
  Var log_prob;
  Var entropy;
};

namespace {

// Shared trajectory walker: samples, greedily decodes, or replays a forced
// rollout; always accumulates the tape-level log-prob and entropy sums.
Controller::StepResult run_trajectory(Tape& tape, ParamStore& store,
                                      const ControllerSpec& spec, Decode mode,
                                      SequentialRng* rng,
                                      const Rollout* forced) {
  const ControllerNet net = ControllerNet::bind(tape, store, spec.hidden_size);
  LstmState state{tape.input(Tensor({1, spec.hidden_size})),
                  tape.input(Tensor({1, spec.hidden_size}))};
  Var x = net.emb_start;  // start token
  Var log_prob = tape.input(Tensor::scalar(0.0));
  Var entropy = tape.input(Tensor::scalar(0.0));

  auto decide = [&](Var head_w, Var head_b, int valid, Var emb_table,
                    int forced_choice) {
    state = net.step(tape, x, state);
    Var logits = ops::linear(state.h, head_w, head_b);
    Var ls = ops::log_softmax_row(logits, valid);
    int choice;
    switch (mode) {
      case Decode::Forced:
        choice = forced_choice;
        break;
      case Decode::Greedy: {
        const Tensor& lv = tape.value(ls);
        choice = 0;
        for (int k = 1; k < valid; ++k)
          if (lv[k] > lv[choice]) choice = k;
        break;
      }
      case Decode::Sample:
      default: {
        const Tensor& lv = tape.value(ls);
        const double u = rng->uniform();
        double acc = 0.0;
        choice = valid - 1;
        for (int k = 0; k < valid; ++k) {
          acc += std::exp(lv[k]);
          if (u < acc) {
            choice = k;
            break;
          }
        }
        break;
      }
    }
    FTNAS_CHECK(choice >= 0 && choice < valid, "decoded choice out of range");
    log_prob = ops::add(log_prob, ops::select_element(ls, choice));
    entropy = ops::add(entropy, ops::entropy_from_logsoft(ls));
    x = embed_row(tape, emb_table, choice);
    return choice;
  };

  const int P = static_cast<int>(spec.space.primitives.size());
  Controller::StepResult res;
  for (int cell = 0; cell < 2; ++cell) {
    const CellTopology* forced_topo =
        forced ? (cell == 0 ? &forced->normal : &forced->reduce) : nullptr;
    CellTopology topo;
    for (int j = 0; j < spec.space.blocks_per_cell(); ++j) {
      const int valid_in = j + 2;
      const Block* fb =
          forced_topo ? &forced_topo->blocks[static_cast<size_t>(j)] : nullptr;
      Block blk;
      blk.in1 = decide(net.head_in_w, net.head_in_b, valid_in, net.emb_in,
                       fb ? fb->in1 : -1);
      blk.in2 = decide(net.head_in_w, net.head_in_b, valid_in, net.emb_in,
                       fb ? fb->in2 : -1);
      const int o1 = decide(net.head_op_w, net.head_op_b, P, net.emb_op,
                            fb ? spec.space.primitive_index(fb->op1) : -1);
      const int o2 = decide(net.head_op_w, net.head_op_b, P, net.emb_op,
                            fb ? spec.space.primitive_index(fb->op2) : -1);
      blk.op1 = spec.space.primitives[static_cast<size_t>(o1)];
      blk.op2 = spec.space.primitives[static_cast<size_t>(o2)];
      topo.blocks.push_back(blk);
    }
    (cell == 0 ? res.rollout.normal : res.rollout.reduce) = topo;
  }
  res.log_prob = log_prob;
  res.entropy = entropy;
  return res;
}

}  // namespace

Controller::Controller(ControllerSpec spec, uint64_t seed)
    : spec_(std::move(spec)), store_(seed), opt_(spec_.lr) {
  const int64_t H = spec_.hidden_size;
  const int64_t E = spec_.embed_size;
  const int64_t P = static_cast<int64_t>(spec_.space.primitives.size());
  const int64_t max_in = spec_.space.num_nodes - 1;
  // Embeddings and recurrent weights get small random values; both output
  // heads start at zero so every decision begins exactly uniform.
  store_.param("ctrl/emb_start", {1, E}, InitKind::XavierNormal, E);
  store_.param("ctrl/emb_in", {max_in, E}, InitKind::XavierNormal, E);
  store_.param("ctrl/emb_op", {P, E}, InitKind::XavierNormal, E);
  store_.param("ctrl/lstm/wx", {4 * H, E}, InitKind::XavierNormal, E);
  store_.param("ctrl/lstm/wh", {4 * H, H}, InitKind::XavierNormal, H);
  store_.param("ctrl/lstm/b", {4 * H}, InitKind::Zeros);
  store_.param("ctrl/head_in/w", {max_in, H}, InitKind::Zeros);
  store_.param("ctrl/head_in/b", {max_in}, InitKind::Zeros);
  store_.param("ctrl/head_op/w", {P, H}, InitKind::Zeros);
  store_.param("ctrl/head_op/b", {P}, InitKind::Zeros);
}

SampledRollout Controller::sample(SequentialRng& rng) {
  Tape tape;
  StepResult r =
      run_trajectory(tape, store_, spec_, Decode::Sample, &rng, nullptr);
  return {r.rollout, tape.value(r.log_prob)[0], tape.value(r.entropy)[0]};
}

Rollout Controller::argmax() {
  Tape tape;
  return run_trajectory(tape, store_, spec_, Decode::Greedy, nullptr, nullptr)
      .rollout;
}

SampledRollout Controller::replay(const Rollout& rollout) {
  spec_.space.validate(rollout);
  Tape tape;
  StepResult r =
      run_trajectory(tape, store_, spec_, Decode::Forced, nullptr, &rollout);
  return {r.rollout, tape.value(r.log_prob)[0], tape.value(r.entropy)[0]};
}

bool Controller::reinforce_step(const Rollout& rollout, double reward) {
  if (!std::isfinite(reward)) return false;
  spec_.space.validate(rollout);
  if (!baseline_init_) {
    baseline_ = reward;
    baseline_init_ = true;
  }
  const double advantage = reward - baseline_;

  Tape tape;
  StepResult r =
      run_trajectory(tape, store_, spec_, Decode::Forced, nullptr, &rollout);
  // Ascend J = (R - b) log pi + c_H H by descending -J.
  Var obj = ops::axpby(r.log_prob, r.entropy, -advantage, -spec_.entropy_coef);
  tape.backward(obj);
  for (const auto& [name, var] : tape.params()) {
    if (!tape.has_grad(var)) continue;
    opt_.step(name, store_.params().at(name), tape.grad(var));
  }
  baseline_ = spec_.baseline_momentum * baseline_ +
              (1.0 - spec_.baseline_momentum) * reward;
  ++steps_;
  return true;
}

std::vector<std::vector<double>> Controller::decision_tables() {
  Tape tape;
  std::vector<std::vector<double>> tables;
  const ControllerNet net = ControllerNet::bind(tape, store_, spec_.hidden_size);
  LstmState state{tape.input(Tensor({1, spec_.hidden_size})),
                  tape.input(Tensor({1, spec_.hidden_size}))};
  Var x = net.emb_start;
  auto decide = [&](Var hw, Var hb, int valid, Var emb) {
    state = net.step(tape, x, state);
    Var ls = ops::log_softmax_row(ops::linear(state.h, hw, hb), valid);
    const Tensor& lv = tape.value(ls);
    std::vector<double> probs;
    int best = 0;
    for (int k = 0; k < valid; ++k) {
      probs.push_back(std::exp(lv[k]));
      if (lv[k] > lv[best]) best = k;
    }
    tables.push_back(std::move(probs));
    x = embed_row(tape, emb, best);
  };
  const int P = static_cast<int>(spec_.space.primitives.size());
  for (int cell = 0; cell < 2; ++cell)
    for (int j = 0; j < spec_.space.blocks_per_cell(); ++j) {
      decide(net.head_in_w, net.head_in_b, j + 2, net.emb_in);
      decide(net.head_in_w, net.head_in_b, j + 2, net.emb_in);
      decide(net.head_op_w, net.head_op_b, P, net.emb_op);
      decide(net.head_op_w, net.head_op_b, P, net.emb_op);
    }
  return tables;
}

}  // namespace ftnas
