#pragma once

#include <map>
#include <string>
#include <vector>

#include "ftnas/ftt.hpp"

namespace ftnas {

struct EvalRow {
  std::string arch_id;
  std::string training;
  std::string fault_kind;
  double rate = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  std::vector<double> per_seed;
  int64_t flops = 0;
  int64_t params = 0;
};

// Accuracy-vs-fault-rate table with enough metadata to reproduce any row.
struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, std::string> meta;

  std::string to_json() const;
  std::string to_csv() const;
  static EvalReport from_json(const std::string& text);
};

// Resolves a (kind, rate) sweep cell into a concrete fault spec plus the
// quantization the weights must use for that fault class.
struct SweepCell {
  FaultModelSpec fault;
  QuantConfig quant;
};
SweepCell fault_for_rate(const std::string& kind, double rate,
                         double saf1_fraction, const QuantConfig& base);

// Accuracy at every (rate, seed); weight-fault masks are frozen per seed,
// feature-fault masks resample per batch.
EvalReport sweep_model(Model& model, const std::string& arch_id,
                       const std::string& training_tag,
                       const SweepRunConfig& cfg, const QuantConfig& quant,
                       const Dataset& data);

Rollout uniform_rollout(const SpaceSpec& space, SequentialRng& rng);

// FTT-trains n uniformly sampled architectures and reports their clean and
// faulty accuracy with cost accounting; when selected_rollout is non-empty it
// is trained and reported alongside as the controller pick.
EvalReport random_sample_baseline(const RunConfig& cfg, const Dataset& data,
                                  std::ostream* log = nullptr);

struct InspectionResult {
  // stacked-primitive study: primitive -> (clean acc, faulty acc)
  std::vector<std::string> primitives;
  std::vector<double> clean_acc;
  std::vector<double> faulty_acc;
  // mixed-block study: kernel class -> (mean |w|, std |w|)
  std::map<std::string, std::pair<double, double>> magnitudes;

  std::string to_json() const;
};

InspectionResult primitive_inspection(const RunConfig& cfg, const Dataset& data,
                                      std::ostream* log = nullptr);

}  // namespace ftnas
