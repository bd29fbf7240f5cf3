#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftnas/dataset.hpp"
#include "ftnas/fault.hpp"
#include "ftnas/graph.hpp"

namespace ftnas {

struct QuantConfig {
  bool enabled = true;
  int weight_bits = 8;
  int feature_bits = 8;
  QuantScheme weight_scheme = QuantScheme::CmosComplement;
  bool operator==(const QuantConfig&) const = default;
};

struct TrainConfig {
  int epochs = 12;
  int batch_size = 32;
  double lr = 0.05;  // cosine annealed to zero
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double alpha_l = 0.5;
  FaultModelSpec fault;
  QuantConfig quant;
  bool mibb_saturate = true;
  std::string weight_grad = "straight-through";  // or "masked"
  // Successive-rate selection: pick the largest rate that keeps clean
  // accuracy above the floor. Empty disables the protocol.
  std::vector<double> rate_candidates;
  double rate_accuracy_floor = 0.5;
  bool operator==(const TrainConfig&) const = default;
};

struct SearchRunConfig {
  int epochs = 16;
  int batch_size = 32;
  double lr_w = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_theta = 1e-3;
  double baseline_momentum = 0.99;
  double entropy_coef = 0.01;
  double alpha_r = 0.5;
  double alpha_l = 0.5;
  double train_fraction = 0.8;
  int controller_hidden = 100;
  int controller_embed = 32;
  FaultModelSpec fault;
  QuantConfig quant;
  bool mibb_saturate = true;
  bool operator==(const SearchRunConfig&) const = default;
};

struct SweepRunConfig {
  std::string fault_kind = "mibb";
  std::vector<double> rates = {3e-6, 1e-5, 3e-5, 1e-4, 3e-4};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  // For stuck-at sweeps the rate is p0 + p1 and this is p1 / (p0 + p1).
  double saf1_fraction = 0.1625;
  int batch_size = 64;
  bool operator==(const SweepRunConfig&) const = default;
};

struct BaselineRunConfig {
  int samples = 5;
  bool operator==(const BaselineRunConfig&) const = default;
};

struct InspectRunConfig {
  std::vector<std::string> primitives = {"sep_conv_3x3", "sep_conv_5x5",
                                         "dil_conv_3x3", "dil_conv_5x5"};
  int depth = 5;
  int mixed_blocks = 4;
  bool operator==(const InspectRunConfig&) const = default;
};

// One file fully determines a run.
struct RunConfig {
  int schema_version = 1;
  uint64_t seed = 1;
  bool deterministic = true;
  std::string rollout;  // text form; empty means controller/space default
  DatasetSpec dataset;
  NetworkSpec network;
  TrainConfig train;
  SearchRunConfig search;
  SweepRunConfig sweep;
  BaselineRunConfig baseline;
  InspectRunConfig inspect;
};

RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config_file(const std::string& path);
uint64_t config_hash(const RunConfig& cfg);

WeightGradMode weight_grad_from_string(const std::string& s);

}  // namespace ftnas
