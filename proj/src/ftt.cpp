#include "ftnas/ftt.hpp"

#include <cmath>

#include "ftnas/check.hpp"
#include "ftnas/checkpoint.hpp"
#include "ftnas/optim.hpp"
#include "json.hpp"

namespace ftnas {

Var ftt_loss(Var logits_clean, Var logits_faulty,
             const std::vector<int>& labels, double alpha_l) {
  FTNAS_CHECK(alpha_l >= 0.0 && alpha_l <= 1.0, "alpha_l outside [0,1]");
  if (alpha_l == 0.0) {
    FTNAS_CHECK(logits_clean.defined(), "clean logits required");
    return ops::softmax_cross_entropy(logits_clean, labels);
  }
  if (alpha_l == 1.0) {
    FTNAS_CHECK(logits_faulty.defined(), "faulty logits required");
    return ops::softmax_cross_entropy(logits_faulty, labels);
  }
  FTNAS_CHECK(logits_clean.defined() && logits_faulty.defined(),
              "both logit sets required for alpha_l in (0,1)");
  Var ce_c = ops::softmax_cross_entropy(logits_clean, labels);
  Var ce_f = ops::softmax_cross_entropy(logits_faulty, labels);
  return ops::axpby(ce_c, ce_f, 1.0 - alpha_l, alpha_l);
}

double ft_reward(double acc_c, double acc_f, double alpha_r) {
  FTNAS_CHECK(alpha_r >= 0.0 && alpha_r <= 1.0, "alpha_r outside [0,1]");
  FTNAS_CHECK(acc_c >= 0.0 && acc_c <= 1.0 && acc_f >= 0.0 && acc_f <= 1.0,
              "accuracies outside [0,1]");
  // Delta form keeps R == acc_c exact whenever acc_f == acc_c.
  return acc_c + alpha_r * (acc_f - acc_c);
}

double batch_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const int64_t N = logits.dim(0), K = logits.dim(1);
  int64_t correct = 0;
  for (int64_t n = 0; n < N; ++n) {
    int64_t best = 0;
    for (int64_t k = 1; k < K; ++k)
      if (logits[n * K + k] > logits[n * K + best]) best = k;
    if (static_cast<int>(best) == labels[static_cast<size_t>(n)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(N);
}

ForwardOptions make_forward_options(const QuantConfig& quant,
                                    const FaultModelSpec& fault,
                                    bool mibb_saturate, bool bn_batch_stats) {
  ForwardOptions opt;
  opt.quantize = quant.enabled;
  opt.weight_bits = quant.weight_bits;
  opt.feature_bits = quant.feature_bits;
  opt.weight_scheme = quant.weight_scheme;
  opt.fault = fault;
  opt.mibb_saturate = mibb_saturate;
  opt.bn_batch_stats = bn_batch_stats;
  return opt;
}

double evaluate_accuracy(Model& model, const Tensor& images,
                         const std::vector<int>& labels,
                         const EvalSetup& setup) {
  const int64_t n = images.dim(0);
  FTNAS_CHECK(n == static_cast<int64_t>(labels.size()), "label count mismatch");
  ForwardOptions opt = make_forward_options(setup.quant, setup.fault,
                                            setup.mibb_saturate,
                                            setup.bn_batch_stats);
  const RngStream run(setup.fault_seed);
  std::map<std::string, FaultMask> captured;
  int64_t correct = 0;
  int64_t batch_index = 0;
  for (int64_t at = 0; at < n; at += setup.batch_size, ++batch_index) {
    const int64_t end = std::min(n, at + setup.batch_size);
    std::vector<int64_t> idx;
    for (int64_t i = at; i < end; ++i) idx.push_back(i);
    Tensor xb = gather_images(images, idx);
    std::vector<int> yb = gather_labels(labels, idx);

    opt.fault_rng = run.derive("batch").derive(static_cast<uint64_t>(batch_index));
    if (setup.freeze_weight_masks && is_weight_fault(setup.fault.kind)) {
      if (batch_index == 0) {
        opt.fault_rng = run.derive("device");
        opt.capture_weight_masks = &captured;
      } else {
        opt.capture_weight_masks = nullptr;
        opt.frozen_weight_masks = &captured;
      }
    }
    Tape tape;
    Var logits = model.forward(tape, xb, opt);
    const Tensor& lv = tape.value(logits);
    for (int64_t i = 0; i < lv.dim(0); ++i) {
      int64_t best = 0;
      for (int64_t k = 1; k < lv.dim(1); ++k)
        if (lv[i * lv.dim(1) + k] > lv[i * lv.dim(1) + best]) best = k;
      if (static_cast<int>(best) == yb[static_cast<size_t>(i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

struct StepOutcome {
  double loss = 0.0;
};

// One optimization step of the weighted clean/faulty objective. The clean and
// faulty passes share the batch and the parameters; running BN statistics
// follow the first executed pass.
StepOutcome ftt_step(Model& model, SgdMomentum& opt, double lr,
                     const Tensor& xb, const std::vector<int>& yb,
                     double alpha_l, const FaultModelSpec& fault,
                     const QuantConfig& quant, bool mibb_saturate,
                     WeightGradMode wgrad, const RngStream& fault_rng,
                     bool update_running) {
  Tape tape;
  const bool need_clean = alpha_l < 1.0 || fault.kind == FaultKind::None;
  const bool need_faulty = alpha_l > 0.0 && fault.kind != FaultKind::None;

  Var logits_c, logits_f;
  if (need_clean) {
    FaultModelSpec none;
    ForwardOptions copt = make_forward_options(quant, none, mibb_saturate, true);
    copt.update_running_stats = update_running;
    logits_c = model.forward(tape, xb, copt);
  }
  if (need_faulty) {
    ForwardOptions fopt =
        make_forward_options(quant, fault, mibb_saturate, true);
    fopt.fault_rng = fault_rng;
    fopt.weight_grad = wgrad;
    fopt.update_running_stats = update_running && !need_clean;
    logits_f = model.forward(tape, xb, fopt);
  }
  Var loss = need_faulty
                 ? ftt_loss(logits_c, logits_f, yb, alpha_l)
                 : ftt_loss(logits_c, Var{}, yb, 0.0);
  const double loss_value = tape.value(loss)[0];
  if (!std::isfinite(loss_value))
    throw DivergenceError("non-finite training loss " +
                          std::to_string(loss_value));
  tape.backward(loss);
  ParamStore& store = model.store();
  for (const auto& [name, var] : tape.params()) {
    if (!tape.has_grad(var)) continue;
    opt.step(name, store.params().at(name), tape.grad(var), lr);
  }
  return {loss_value};
}

nlohmann::json fault_summary(const FaultModelSpec& f) {
  return nlohmann::json{{"kind", to_string(f.kind)},
                        {"p", f.p},
                        {"p_m", f.p_m},
                        {"p0", f.p0},
                        {"p1", f.p1},
                        {"sigma", f.sigma}};
}

}  // namespace

TrainResult train_fixed(Model& model, const Dataset& data,
                        const TrainConfig& cfg, uint64_t seed,
                        std::ostream* log) {
  TrainResult res;
  SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  const RngStream root(seed);
  const WeightGradMode wgrad = weight_grad_from_string(cfg.weight_grad);
  const int64_t n = data.train_images.dim(0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
    const auto batches = make_batches(
        n, cfg.batch_size, root.derive("batches").derive(static_cast<uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (size_t b = 0; b < batches.size(); ++b) {
      Tensor xb = gather_images(data.train_images, batches[b]);
      const std::vector<int> yb = gather_labels(data.train_labels, batches[b]);
      const RngStream step_rng = root.derive("fault")
                                     .derive(static_cast<uint64_t>(epoch))
                                     .derive(static_cast<uint64_t>(b));
      StepOutcome out =
          ftt_step(model, opt, lr, xb, yb, cfg.alpha_l, cfg.fault, cfg.quant,
                   cfg.mibb_saturate, wgrad, step_rng, /*update_running=*/true);
      loss_sum += out.loss;
    }
    res.epoch_losses.push_back(loss_sum / static_cast<double>(batches.size()));
    if (log) {
      nlohmann::json line{{"event", "train_epoch"},
                          {"epoch", epoch},
                          {"lr", lr},
                          {"loss", res.epoch_losses.back()},
                          {"alpha_l", cfg.alpha_l},
                          {"fault", fault_summary(cfg.fault)},
                          {"seed", seed}};
      (*log) << line.dump() << "\n";
    }
  }
  FaultModelSpec none;
  EvalSetup clean{cfg.quant, none, cfg.mibb_saturate, cfg.batch_size,
                  /*bn_batch_stats=*/false, seed, true};
  res.clean_test_acc =
      evaluate_accuracy(model, data.test_images, data.test_labels, clean);
  res.clean_train_acc =
      evaluate_accuracy(model, data.train_images, data.train_labels, clean);
  return res;
}

FttTrainResult ftt_train(const std::function<std::unique_ptr<Model>()>& fresh,
                         const Dataset& data, const TrainConfig& cfg,
                         uint64_t seed, std::ostream* log) {
  FttTrainResult out;
  if (cfg.rate_candidates.empty() || cfg.fault.kind == FaultKind::None ||
      cfg.alpha_l == 0.0) {
    out.model = fresh();
    out.train = train_fixed(*out.model, data, cfg, seed, log);
    out.chosen_rate = cfg.fault.kind == FaultKind::MiBB ? cfg.fault.p_m : 0.0;
    return out;
  }
  // Successively try injection rates, largest first, and keep the largest
  // whose clean accuracy stays above the floor.
  std::vector<double> rates = cfg.rate_candidates;
  std::sort(rates.rbegin(), rates.rend());
  for (size_t i = 0; i < rates.size(); ++i) {
    TrainConfig attempt = cfg;
    attempt.fault.p_m = rates[i];
    attempt.rate_candidates.clear();
    std::unique_ptr<Model> model = fresh();
    TrainResult tr = train_fixed(*model, data, attempt, seed, log);
    out.tried.emplace_back(rates[i], tr.clean_test_acc);
    if (log) {
      nlohmann::json line{{"event", "rate_probe"},
                          {"rate", rates[i]},
                          {"clean_test_acc", tr.clean_test_acc},
                          {"floor", cfg.rate_accuracy_floor}};
      (*log) << line.dump() << "\n";
    }
    if (tr.clean_test_acc > cfg.rate_accuracy_floor || i + 1 == rates.size()) {
      out.model = std::move(model);
      out.train = tr;
      out.chosen_rate = rates[i];
      break;
    }
  }
  return out;
}

SearchResult search(SuperNet& net, Controller& ctrl, const Dataset& data,
                    const SearchRunConfig& cfg, uint64_t seed,
                    std::ostream* log, const std::string& divergence_ckpt) {
  SearchResult result;
  const RngStream root(seed);
  const int64_t n = data.train_images.dim(0);

  // Deterministic split: the first train_fraction of a seeded shuffle trains
  // the shared weights, the rest trains the controller.
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  const RngStream split = root.derive("split");
  for (int64_t i = n - 1; i > 0; --i) {
    const int64_t j =
        split.uniform_int(static_cast<uint64_t>(i), static_cast<uint32_t>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  const int64_t n_t =
      std::max<int64_t>(1, static_cast<int64_t>(std::llround(
                               cfg.train_fraction * static_cast<double>(n))));
  const std::vector<int64_t> dt(order.begin(), order.begin() + n_t);
  const std::vector<int64_t> dv(order.begin() + n_t, order.end());
  FTNAS_CHECK(!dv.empty(), "controller split is empty");

  SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  const WeightGradMode wgrad = WeightGradMode::StraightThrough;

  auto subset_batches = [&](const std::vector<int64_t>& pool, int epoch,
                            const char* tag) {
    const auto rel = make_batches(
        static_cast<int64_t>(pool.size()), cfg.batch_size,
        root.derive(tag).derive(static_cast<uint64_t>(epoch)));
    std::vector<std::vector<int64_t>> abs;
    for (const auto& batch : rel) {
      std::vector<int64_t> b;
      for (int64_t r : batch) b.push_back(pool[static_cast<size_t>(r)]);
      abs.push_back(std::move(b));
    }
    return abs;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr_w = cosine_lr(cfg.lr_w, epoch, cfg.epochs);
    double loss_sum = 0.0;
    const auto t_batches = subset_batches(dt, epoch, "dt");
    for (size_t b = 0; b < t_batches.size(); ++b) {
      SequentialRng crng(root.derive("sample-w")
                             .derive(static_cast<uint64_t>(epoch))
                             .derive(static_cast<uint64_t>(b)));
      const SampledRollout sr = ctrl.sample(crng);
      CandidateModel cand(&net, sr.rollout);
      Tensor xb = gather_images(data.train_images, t_batches[b]);
      const std::vector<int> yb = gather_labels(data.train_labels, t_batches[b]);
      const RngStream frng = root.derive("fault-w")
                                 .derive(static_cast<uint64_t>(epoch))
                                 .derive(static_cast<uint64_t>(b));
      try {
        StepOutcome out =
            ftt_step(cand, opt, lr_w, xb, yb, cfg.alpha_l, cfg.fault, cfg.quant,
                     cfg.mibb_saturate, wgrad, frng, /*update_running=*/false);
        loss_sum += out.loss;
      } catch (const DivergenceError&) {
        if (!divergence_ckpt.empty()) save_params(divergence_ckpt, net.store());
        throw;
      }
    }

    double reward_sum = 0.0, entropy_sum = 0.0;
    const auto v_batches = subset_batches(dv, epoch, "dv");
    for (size_t b = 0; b < v_batches.size(); ++b) {
      SequentialRng crng(root.derive("sample-c")
                             .derive(static_cast<uint64_t>(epoch))
                             .derive(static_cast<uint64_t>(b)));
      const SampledRollout sr = ctrl.sample(crng);
      CandidateModel cand(&net, sr.rollout);
      Tensor xb = gather_images(data.train_images, v_batches[b]);
      const std::vector<int> yb = gather_labels(data.train_labels, v_batches[b]);

      FaultModelSpec none;
      ForwardOptions copt =
          make_forward_options(cfg.quant, none, cfg.mibb_saturate, true);
      Tape tc;
      const double acc_c = batch_accuracy(tc.value(cand.forward(tc, xb, copt)), yb);
      double acc_f = acc_c;
      if (cfg.fault.kind != FaultKind::None) {
        ForwardOptions fopt =
            make_forward_options(cfg.quant, cfg.fault, cfg.mibb_saturate, true);
        fopt.fault_rng = root.derive("fault-c")
                             .derive(static_cast<uint64_t>(epoch))
                             .derive(static_cast<uint64_t>(b));
        Tape tf;
        acc_f = batch_accuracy(tf.value(cand.forward(tf, xb, fopt)), yb);
      }
      const double reward = ft_reward(acc_c, acc_f, cfg.alpha_r);
      ctrl.reinforce_step(sr.rollout, reward);
      reward_sum += reward;
      entropy_sum += sr.entropy;
    }

    SearchEpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(t_batches.size());
    rec.mean_reward = reward_sum / static_cast<double>(v_batches.size());
    rec.baseline = ctrl.baseline();
    rec.mean_entropy = entropy_sum / static_cast<double>(v_batches.size());
    rec.argmax_rollout = ctrl.argmax().to_text();
    result.history.push_back(rec);
    if (log) {
      nlohmann::json line{{"event", "search_epoch"},
                          {"epoch", epoch},
                          {"lr_w", lr_w},
                          {"mean_loss", rec.mean_loss},
                          {"mean_reward", rec.mean_reward},
                          {"baseline", rec.baseline},
                          {"mean_entropy", rec.mean_entropy},
                          {"argmax", rec.argmax_rollout},
                          {"fault", fault_summary(cfg.fault)},
                          {"seed", seed}};
      (*log) << line.dump() << "\n";
    }
  }
  result.best = ctrl.argmax();
  return result;
}

void save_params(const std::string& path, const ParamStore& store,
                 const std::map<std::string, std::string>& meta) {
  Checkpoint ckpt;
  ckpt.meta = meta;
  for (const auto& [name, t] : store.params()) ckpt.tensors["param/" + name] = t;
  for (const auto& [name, t] : store.buffers())
    ckpt.tensors["buffer/" + name] = t;
  save_checkpoint(path, ckpt);
}

void load_params(const std::string& path, ParamStore* store) {
  Checkpoint ckpt = load_checkpoint(path);
  for (auto& [name, t] : ckpt.tensors) {
    if (name.rfind("param/", 0) == 0) {
      const std::string key = name.substr(6);
      auto it = store->params().find(key);
      if (it == store->params().end()) {
        store->params().emplace(key, t.clone());  // not yet materialized
      } else {
        FTNAS_CHECK(it->second.shape() == t.shape(), "shape mismatch for " << key);
        std::copy(t.data(), t.data() + t.size(), it->second.mutable_data());
      }
    } else if (name.rfind("buffer/", 0) == 0) {
      const std::string key = name.substr(7);
      auto it = store->buffers().find(key);
      if (it == store->buffers().end()) {
        store->buffers().emplace(key, t.clone());
      } else {
        std::copy(t.data(), t.data() + t.size(), it->second.mutable_data());
      }
    }
  }
}

}  // namespace ftnas
