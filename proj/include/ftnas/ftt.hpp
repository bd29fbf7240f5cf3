#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>

#include "ftnas/config.hpp"
#include "ftnas/controller.hpp"
#include "ftnas/dataset.hpp"
#include "ftnas/graph.hpp"

namespace ftnas {

// Weighted cross-entropy over clean and faulty logits. alpha 0 and 1
// degenerate exactly to the clean / faulty loss.
Var ftt_loss(Var logits_clean, Var logits_faulty, const std::vector<int>& labels,
             double alpha_l);

// Weighted accuracy reward; exact when both accuracies coincide.
double ft_reward(double acc_c, double acc_f, double alpha_r);

double batch_accuracy(const Tensor& logits, const std::vector<int>& labels);

// Minimal trainable-model interface shared by supernet candidates and
// stacked networks.
class Model {
 public:
  virtual ~Model() = default;
  virtual Var forward(Tape& tape, const Tensor& batch, ForwardOptions& opt) = 0;
  virtual ParamStore& store() = 0;
};

class CandidateModel : public Model {
 public:
  CandidateModel(SuperNet* net, Rollout rollout)
      : cand_(assemble(*net, rollout)) {}
  Var forward(Tape& tape, const Tensor& batch, ForwardOptions& opt) override {
    return candidate_forward(cand_, tape, batch, opt);
  }
  ParamStore& store() override { return cand_.net->store(); }
  const CandidateNet& candidate() const { return cand_; }

 private:
  CandidateNet cand_;
};

// A fixed architecture with its own private weights.
class OwnedCandidateModel : public Model {
 public:
  OwnedCandidateModel(NetworkSpec spec, Rollout rollout, uint64_t seed)
      : net_(std::move(spec), seed), cand_(assemble(net_, rollout)) {}
  Var forward(Tape& tape, const Tensor& batch, ForwardOptions& opt) override {
    return candidate_forward(cand_, tape, batch, opt);
  }
  ParamStore& store() override { return net_.store(); }
  const CandidateNet& candidate() const { return cand_; }

 private:
  SuperNet net_;
  CandidateNet cand_;
};

class StackModel : public Model {
 public:
  StackModel(StackNetSpec spec, uint64_t seed)
      : net_(std::move(spec), seed),
        choices_(net_.spec().blocks.size(), 0) {}
  Var forward(Tape& tape, const Tensor& batch, ForwardOptions& opt) override {
    return net_.forward(tape, batch, opt, choices_);
  }
  ParamStore& store() override { return net_.store(); }
  StackNet& net() { return net_; }
  void set_choices(std::vector<int> c) { choices_ = std::move(c); }

 private:
  StackNet net_;
  std::vector<int> choices_;
};

struct EvalSetup {
  QuantConfig quant;
  FaultModelSpec fault;
  bool mibb_saturate = true;
  int batch_size = 64;
  bool bn_batch_stats = false;
  uint64_t fault_seed = 1;
  // One fault draw per run for weight faults (a single fabricated device);
  // feature faults always resample per batch.
  bool freeze_weight_masks = true;
};

double evaluate_accuracy(Model& model, const Tensor& images,
                         const std::vector<int>& labels, const EvalSetup& setup);

struct TrainResult {
  double clean_test_acc = 0.0;
  double clean_train_acc = 0.0;
  std::vector<double> epoch_losses;
};

// SGD with momentum and cosine-annealed learning rate over the full dataset;
// the loss follows cfg.alpha_l and cfg.fault.
TrainResult train_fixed(Model& model, const Dataset& data,
                        const TrainConfig& cfg, uint64_t seed,
                        std::ostream* log = nullptr);

struct FttTrainResult {
  std::unique_ptr<Model> model;
  TrainResult train;
  double chosen_rate = 0.0;
  std::vector<std::pair<double, double>> tried;  // (rate, clean accuracy)
};

// Trains a fresh model under cfg.fault; when cfg.rate_candidates is set,
// successively tries the rates and keeps the largest whose clean accuracy
// stays above cfg.rate_accuracy_floor (the last candidate is kept even if it
// fails the floor).
FttTrainResult ftt_train(const std::function<std::unique_ptr<Model>()>& fresh,
                         const Dataset& data, const TrainConfig& cfg,
                         uint64_t seed, std::ostream* log = nullptr);

struct SearchEpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_reward = 0.0;
  double baseline = 0.0;
  double mean_entropy = 0.0;
  std::string argmax_rollout;
};

struct SearchResult {
  Rollout best;
  std::vector<SearchEpochRecord> history;
};

// Alternating shared-weights / controller optimization on separate splits of
// the training data. On divergence the shared weights are checkpointed to
// divergence_ckpt (when set) before the error propagates.
SearchResult search(SuperNet& net, Controller& ctrl, const Dataset& data,
                    const SearchRunConfig& cfg, uint64_t seed,
                    std::ostream* log = nullptr,
                    const std::string& divergence_ckpt = "");

ForwardOptions make_forward_options(const QuantConfig& quant,
                                    const FaultModelSpec& fault,
                                    bool mibb_saturate, bool bn_batch_stats);

void save_params(const std::string& path, const ParamStore& store,
                 const std::map<std::string, std::string>& meta = {});
void load_params(const std::string& path, ParamStore* store);

}  // namespace ftnas
