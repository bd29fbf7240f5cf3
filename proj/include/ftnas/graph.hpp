#pragma once

#include <map>
#include <string>
#include <vector>

#include "ftnas/autograd.hpp"
#include "ftnas/fault.hpp"
#include "ftnas/primitives.hpp"
#include "ftnas/rng.hpp"

namespace ftnas {

// Decision block for one node: two input edges, one primitive per edge.
// Input indices are 0-based (0 and 1 are the cell's inputs).
struct Block {
  int in1 = 0;
  int in2 = 0;
  PrimitiveKind op1 = PrimitiveKind::None;
  PrimitiveKind op2 = PrimitiveKind::None;
  bool operator==(const Block&) const = default;
};

struct CellTopology {
  std::vector<Block> blocks;  // blocks[j] decides node j+2
  bool operator==(const CellTopology&) const = default;
};

struct Rollout {
  CellTopology normal;
  CellTopology reduce;
  bool operator==(const Rollout&) const = default;

  // Canonical text form: per-node "in.op+in.op" pairs with 1-based inputs,
  //   normal:1.sep_conv_3x3+2.skip_connect,...;reduce:...
  std::string to_text() const;
  static Rollout from_text(const std::string& text);
};

struct SpaceSpec {
  int num_nodes = 6;  // B; nodes 1 and 2 are the cell inputs
  std::vector<PrimitiveKind> primitives = all_primitives();

  int blocks_per_cell() const { return num_nodes - 2; }
  unsigned __int128 rollout_count() const;
  void validate(const Rollout& r) const;
  int primitive_index(PrimitiveKind k) const;
};

struct NetworkSpec {
  SpaceSpec space;
  int num_cells = 8;
  int base_channels = 20;
  int channel_growth = 2;             // added at every reduction cell
  bool multiply_on_reduction = false; // doubles channels instead of adding
  int in_channels = 3;
  int num_classes = 10;
  std::string preprocess = "relu_conv_bn_1x1";

  std::vector<int> reduction_positions() const;
};

enum class WeightGradMode { StraightThrough, Masked };

struct ForwardOptions {
  bool quantize = false;
  int weight_bits = 8;
  QuantScheme weight_scheme = QuantScheme::CmosComplement;
  int feature_bits = 8;

  FaultModelSpec fault;  // FaultKind::None means clean
  RngStream fault_rng;

  bool bn_batch_stats = true;
  bool update_running_stats = false;
  double bn_momentum = 0.1;

  WeightGradMode weight_grad = WeightGradMode::StraightThrough;
  bool mibb_saturate = true;

  // When set, weight-fault masks are taken from here instead of sampled.
  const std::map<std::string, FaultMask>* frozen_weight_masks = nullptr;
  // When set, sampled weight-fault masks are recorded here (one device draw).
  std::map<std::string, FaultMask>* capture_weight_masks = nullptr;
};

enum class InitKind { HeNormal, XavierNormal, Zeros, Ones };

// Named parameter/buffer store. Entries are created lazily with a
// deterministic per-name initializer, so creation order never matters.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : rng_(RngStream(seed)) {}

  Tensor& param(const std::string& name, const std::vector<int64_t>& shape,
                InitKind init, int64_t fan_in = 0);
  Tensor& buffer(const std::string& name, const std::vector<int64_t>& shape,
                 double fill);
  bool has_param(const std::string& name) const { return params_.count(name) > 0; }

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  std::map<std::string, Tensor>& buffers() { return buffers_; }
  const std::map<std::string, Tensor>& buffers() const { return buffers_; }

  int64_t param_count() const;

 private:
  RngStream rng_;
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> buffers_;
};

// Shared-weights network over the whole space: parameters exist (lazily) for
// every possible connection and operation; a candidate indexes a subset.
class SuperNet {
 public:
  SuperNet(NetworkSpec spec, uint64_t seed)
      : spec_(std::move(spec)), store_(seed) {}

  const NetworkSpec& spec() const { return spec_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

 private:
  NetworkSpec spec_;
  ParamStore store_;
};

// View over a SuperNet restricted to one rollout; no weights are copied.
struct CandidateNet {
  SuperNet* net = nullptr;
  Rollout rollout;
};

CandidateNet assemble(SuperNet& net, const Rollout& rollout);

struct NetCost {
  int64_t flops = 0;
  int64_t params = 0;     // everything the candidate touches
  int64_t op_params = 0;  // selected edge operations only
};

NetCost candidate_cost(const CandidateNet& c, int input_hw);

// Forward pass of a candidate over an NCHW batch. Quantization, fault
// injection and BN behavior follow opt. Throws DivergenceError with the
// offending scope if an activation goes non-finite.
Var candidate_forward(const CandidateNet& c, Tape& tape, const Tensor& batch,
                      ForwardOptions& opt);

// One primitive applied under a parameter scope; building block for cells
// and stacked test networks.
struct PrimitiveCtx {
  ParamStore* store = nullptr;
  ForwardOptions* opt = nullptr;
};

Var primitive_forward(Tape& tape, PrimitiveCtx& ctx, const std::string& scope,
                      PrimitiveKind kind, Var x, int64_t c_in, int64_t c_out,
                      int64_t stride);

// Plain feed-forward stack of primitives: stem conv, depth blocks (each block
// picks one of its candidate primitives per forward), global pool, linear
// classifier. Single-candidate blocks make a fixed CNN.
struct StackNetSpec {
  std::vector<std::vector<PrimitiveKind>> blocks;
  std::vector<int64_t> strides;  // one per block
  int channels = 16;
  int in_channels = 3;
  int num_classes = 10;

  static StackNetSpec uniform(PrimitiveKind k, int depth, int channels,
                              std::vector<int> reduce_at, int in_channels,
                              int num_classes);
};

class StackNet {
 public:
  StackNet(StackNetSpec spec, uint64_t seed)
      : spec_(std::move(spec)), store_(seed) {}

  const StackNetSpec& spec() const { return spec_; }
  ParamStore& store() { return store_; }

  // choices[i] selects the primitive of block i; empty means all zeros.
  Var forward(Tape& tape, const Tensor& batch, ForwardOptions& opt,
              const std::vector<int>& choices);

 private:
  StackNetSpec spec_;
  ParamStore store_;
};

}  // namespace ftnas
