#include "ftnas/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "ftnas/check.hpp"

namespace ftnas {

// ---------------------------------------------------------------------------
// Rollout text form

std::string Rollout::to_text() const {
  auto cell = [](const CellTopology& t) {
    std::ostringstream os;
    for (size_t j = 0; j < t.blocks.size(); ++j) {
      if (j) os << ",";
      const Block& b = t.blocks[j];
      os << b.in1 + 1 << "." << to_string(b.op1) << "+" << b.in2 + 1 << "."
         << to_string(b.op2);
    }
    return os.str();
  };
  return "normal:" + cell(normal) + ";reduce:" + cell(reduce);
}

namespace {

CellTopology parse_cell(const std::string& text) {
  CellTopology topo;
  std::stringstream ss(text);
  std::string node;
  while (std::getline(ss, node, ',')) {
    const size_t plus = node.find('+');
    FTNAS_CHECK(plus != std::string::npos, "bad rollout node '" << node << "'");
    auto parse_edge = [](const std::string& e, int* in, PrimitiveKind* op) {
      const size_t dot = e.find('.');
      FTNAS_CHECK(dot != std::string::npos, "bad rollout edge '" << e << "'");
      const int one_based = std::stoi(e.substr(0, dot));
      FTNAS_CHECK(one_based >= 1, "rollout input index must be >= 1");
      *in = one_based - 1;
      *op = primitive_from_string(e.substr(dot + 1));
    };
    Block b;
    parse_edge(node.substr(0, plus), &b.in1, &b.op1);
    parse_edge(node.substr(plus + 1), &b.in2, &b.op2);
    topo.blocks.push_back(b);
  }
  return topo;
}

}  // namespace

Rollout Rollout::from_text(const std::string& text) {
  const std::string np = "normal:";
  const std::string rp = ";reduce:";
  const size_t rpos = text.find(rp);
  FTNAS_CHECK(text.rfind(np, 0) == 0 && rpos != std::string::npos,
              "bad rollout text '" << text << "'");
  Rollout r;
  r.normal = parse_cell(text.substr(np.size(), rpos - np.size()));
  r.reduce = parse_cell(text.substr(rpos + rp.size()));
  return r;
}

// ---------------------------------------------------------------------------
// Search space

unsigned __int128 SpaceSpec::rollout_count() const {
  unsigned __int128 per_cell = 1;
  const unsigned __int128 nprim = primitives.size();
  for (int node = 3; node <= num_nodes; ++node) {
    const unsigned __int128 inputs = node - 1;
    per_cell *= inputs * inputs * nprim * nprim;
  }
  return per_cell * per_cell;
}

int SpaceSpec::primitive_index(PrimitiveKind k) const {
  for (size_t i = 0; i < primitives.size(); ++i)
    if (primitives[i] == k) return static_cast<int>(i);
  return -1;
}

void SpaceSpec::validate(const Rollout& r) const {
  auto check_cell = [&](const CellTopology& t, const char* which) {
    FTNAS_CHECK(static_cast<int>(t.blocks.size()) == blocks_per_cell(),
                which << " cell has " << t.blocks.size() << " blocks, expected "
                      << blocks_per_cell());
    for (size_t j = 0; j < t.blocks.size(); ++j) {
      const Block& b = t.blocks[j];
      const int node = static_cast<int>(j) + 2;
      FTNAS_CHECK(b.in1 >= 0 && b.in1 < node && b.in2 >= 0 && b.in2 < node,
                  which << " cell node " << node + 1 << " has input ("
                        << b.in1 + 1 << "," << b.in2 + 1
                        << ") outside valid range [1," << node << "]");
      FTNAS_CHECK(primitive_index(b.op1) >= 0 && primitive_index(b.op2) >= 0,
                  which << " cell node " << node + 1
                        << " uses a primitive outside the space");
    }
  };
  check_cell(r.normal, "normal");
  check_cell(r.reduce, "reduce");
}

std::vector<int> NetworkSpec::reduction_positions() const {
  if (num_cells < 2) return {};
  std::vector<int> pos{num_cells / 3, 2 * num_cells / 3};
  if (pos[0] == pos[1]) pos.pop_back();
  return pos;
}

// ---------------------------------------------------------------------------
// Parameter store

Tensor& ParamStore::param(const std::string& name,
                          const std::vector<int64_t>& shape, InitKind init,
                          int64_t fan_in) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    FTNAS_CHECK(it->second.shape() == shape,
                "param " << name << " reused with different shape");
    return it->second;
  }
  Tensor t(shape);
  double* p = t.mutable_data();
  switch (init) {
    case InitKind::Zeros:
      break;
    case InitKind::Ones:
      std::fill(p, p + t.size(), 1.0);
      break;
    case InitKind::HeNormal:
    case InitKind::XavierNormal: {
      FTNAS_CHECK(fan_in > 0, "init for " << name << " needs fan_in");
      const double std =
          init == InitKind::HeNormal
              ? std::sqrt(2.0 / static_cast<double>(fan_in))
              : std::sqrt(1.0 / static_cast<double>(fan_in));
      RngStream s = rng_.derive(name);
      for (int64_t i = 0; i < t.size(); ++i)
        p[i] = std * s.normal(static_cast<uint64_t>(i));
      break;
    }
  }
  return params_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::buffer(const std::string& name,
                           const std::vector<int64_t>& shape, double fill) {
  auto it = buffers_.find(name);
  if (it != buffers_.end()) return it->second;
  return buffers_.emplace(name, Tensor::full(shape, fill)).first->second;
}

int64_t ParamStore::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------
// Forward helpers

namespace {

constexpr double kBnEps = 1e-5;

Tensor mibb_noise(const FaultMask& m) {
  Tensor noise(m.shape);
  double* p = noise.mutable_data();
  const int l = m.quant.frac_len;
  for (int64_t i = 0; i < noise.size(); ++i) {
    if (!m.theta[static_cast<size_t>(i)]) continue;
    const double mag = std::ldexp(1.0, m.alpha[static_cast<size_t>(i)] - l);
    p[i] = m.beta[static_cast<size_t>(i)] ? -mag : mag;
  }
  return noise;
}

QuantSpec feature_spec_for(const Tensor& v, const ForwardOptions& opt) {
  return QuantSpec{opt.feature_bits,
                   find_frac_len(v, opt.feature_bits, QuantScheme::CmosComplement),
                   QuantScheme::CmosComplement};
}

Var quantize_feature(Tape& tape, Var y, const ForwardOptions& opt,
                     int* l_out = nullptr) {
  QuantSpec fq = feature_spec_for(tape.value(y), opt);
  if (l_out) *l_out = fq.frac_len;
  return ops::quantize_ste(y, fq);
}

// Additive bit-bias noise on a conv (or linear) output; mac_fan is c*k^2.
Var inject_feature_fault(Tape& tape, Var y, const std::string& scope,
                         int64_t fan_c, int64_t kernel_k, int feature_l,
                         ForwardOptions& opt) {
  FaultModelSpec fs = opt.fault;
  fs.quant.frac_len = opt.quantize ? feature_l : opt.fault.quant.frac_len;
  FaultMask mask = make_mibb_mask(tape.value(y).shape(), fan_c, kernel_k, fs,
                                  opt.fault_rng.derive(scope));
  y = ops::add_constant(y, mibb_noise(mask));
  if (opt.quantize && opt.mibb_saturate) {
    QuantSpec fq{opt.feature_bits, feature_l, QuantScheme::CmosComplement};
    y = ops::quantize_ste(y, fq);
  }
  return y;
}

Var apply_weight_fault_op(Tape& tape, Var wq, const std::string& name,
                          const QuantSpec& qspec, ForwardOptions& opt) {
  FaultModelSpec fs = opt.fault;
  fs.quant.frac_len = qspec.frac_len;
  switch (fs.kind) {
    case FaultKind::BitFlip:
      FTNAS_CHECK(qspec.scheme == QuantScheme::CmosComplement,
                  "bit flips operate on complement codes; weights are "
                  "quantized under " << to_string(qspec.scheme));
      fs.quant.bit_width = qspec.bit_width;
      fs.quant.scheme = qspec.scheme;
      break;
    case FaultKind::AdSafMultiBit:
      fs.quant.bit_width = qspec.bit_width;
      fs.quant.scheme = qspec.scheme;
      break;
    case FaultKind::AdSaf1Bit:
      // bit_width stays as configured: the number of crossbar bit planes.
      break;
    case FaultKind::LogNormal:
    case FaultKind::ReciprocalNormal:
      fs.quant = qspec;
      break;
    default:
      return wq;
  }

  FaultMask mask;
  if (opt.frozen_weight_masks) {
    auto it = opt.frozen_weight_masks->find(name);
    FTNAS_CHECK(it != opt.frozen_weight_masks->end(),
                "no frozen mask for " << name);
    mask = it->second;
  } else {
    mask = make_weight_fault_mask(tape.value(wq).shape(), fs,
                                  opt.fault_rng.derive(name));
  }
  if (opt.capture_weight_masks) (*opt.capture_weight_masks)[name] = mask;

  Tensor faulted = apply_weight_fault(tape.value(wq), mask);
  if (opt.weight_grad == WeightGradMode::Masked)
    return ops::replace_gated(wq, std::move(faulted), mask.grad_gate());
  return ops::replace_ste(wq, std::move(faulted));
}

Var conv_stage_forward(Tape& tape, PrimitiveCtx& ctx, const std::string& scope,
                       const ConvStage& st, Var x, int64_t c_in, int64_t c_out,
                       int64_t stride) {
  ParamStore& store = *ctx.store;
  ForwardOptions& opt = *ctx.opt;
  const int64_t eff_out = st.depthwise ? c_in : c_out;
  const int64_t cig = st.depthwise ? 1 : c_in;
  ConvGeom geom;
  geom.stride = st.strided ? stride : 1;
  geom.dilation = st.dilation;
  geom.pad = st.dilation * (st.kernel - 1) / 2;
  geom.groups = st.depthwise ? c_in : 1;

  if (st.relu_before) x = ops::relu(x);

  const std::string wname = scope + "/w";
  Tensor& w = store.param(wname, {eff_out, cig, st.kernel, st.kernel},
                          InitKind::HeNormal, cig * st.kernel * st.kernel);
  Var wv = tape.param(wname, w);
  if (opt.quantize) {
    QuantSpec wq{opt.weight_bits,
                 find_frac_len(w, opt.weight_bits, opt.weight_scheme),
                 opt.weight_scheme};
    wv = ops::quantize_ste(wv, wq);
    if (is_weight_fault(opt.fault.kind))
      wv = apply_weight_fault_op(tape, wv, wname, wq, opt);
  } else {
    FTNAS_CHECK(!is_weight_fault(opt.fault.kind),
                "weight faults require quantized execution");
  }

  Var bv;
  if (st.bias) {
    Tensor& b = store.param(scope + "/b", {eff_out}, InitKind::Zeros);
    bv = tape.param(scope + "/b", b);
  }

  Var y = ops::conv2d(x, wv, bv, geom);
  int l_feat = 0;
  if (opt.quantize) y = quantize_feature(tape, y, opt, &l_feat);
  if (opt.fault.kind == FaultKind::MiBB)
    y = inject_feature_fault(tape, y, scope, cig, st.kernel, l_feat, opt);

  if (st.bn_after) {
    Tensor& gamma = store.param(scope + "/bn_g", {eff_out}, InitKind::Ones);
    Tensor& beta = store.param(scope + "/bn_b", {eff_out}, InitKind::Zeros);
    Var gv = tape.param(scope + "/bn_g", gamma);
    Var bev = tape.param(scope + "/bn_b", beta);
    if (opt.bn_batch_stats) {
      BnStats stats;
      y = ops::batchnorm_train(y, gv, bev, kBnEps, &stats);
      if (opt.update_running_stats) {
        Tensor& rm = store.buffer(scope + "/bn_mean", {eff_out}, 0.0);
        Tensor& rv = store.buffer(scope + "/bn_var", {eff_out}, 1.0);
        double* rmp = rm.mutable_data();
        double* rvp = rv.mutable_data();
        const double m = opt.bn_momentum;
        for (int64_t c = 0; c < eff_out; ++c) {
          const double var =
              1.0 / (stats.invstd[c] * stats.invstd[c]) - kBnEps;
          rmp[c] = (1.0 - m) * rmp[c] + m * stats.mean[c];
          rvp[c] = (1.0 - m) * rvp[c] + m * var;
        }
      }
    } else {
      Tensor& rm = store.buffer(scope + "/bn_mean", {eff_out}, 0.0);
      Tensor& rv = store.buffer(scope + "/bn_var", {eff_out}, 1.0);
      Tensor xv = tape.value(y);
      Tensor rmc = rm;
      Tensor rvc = rv;
      Tensor gvv = tape.value(gv);
      Tensor out = kernels::batchnorm_infer(xv, gvv, tape.value(bev), rmc, rvc,
                                            kBnEps);
      Var xin = y;
      y = tape.record(std::move(out), {y, gv, bev},
                      [=](Tape& tp, const Tensor& gy) {
                        const int64_t N = xv.dim(0), C = xv.dim(1),
                                      HW = xv.dim(2) * xv.dim(3);
                        Tensor gx(xv.shape());
                        Tensor gg({C}), gb({C});
                        double* gxp = gx.mutable_data();
                        double* ggp = gg.mutable_data();
                        double* gbp = gb.mutable_data();
                        for (int64_t c = 0; c < C; ++c) {
                          const double inv = 1.0 / std::sqrt(rvc[c] + kBnEps);
                          double sg = 0.0, sgx = 0.0;
                          for (int64_t n = 0; n < N; ++n)
                            for (int64_t i = 0; i < HW; ++i) {
                              const int64_t off = (n * C + c) * HW + i;
                              sg += gy[off];
                              sgx += gy[off] * (xv[off] - rmc[c]) * inv;
                              gxp[off] = gy[off] * gvv[c] * inv;
                            }
                          ggp[c] = sgx;
                          gbp[c] = sg;
                        }
                        tp.accumulate(xin, std::move(gx));
                        tp.accumulate(gv, std::move(gg));
                        tp.accumulate(bev, std::move(gb));
                      });
    }
    if (opt.quantize) y = quantize_feature(tape, y, opt);
  }
  return y;
}

std::vector<ConvStage> preprocess_stages(const std::string& kind) {
  if (kind == "relu_conv_bn_1x1")
    return {{"conv", 1, 1, false, true, true, false, true}};
  if (kind == "relu_conv_bn_3x3")
    return conv_stages(PrimitiveKind::ReluConvBn3x3, 1);
  if (kind == "sep_conv_3x3") return conv_stages(PrimitiveKind::SepConv3x3, 1);
  FTNAS_CHECK(false, "unknown preprocess op '" << kind << "'");
}

Var run_stages(Tape& tape, PrimitiveCtx& ctx, const std::string& scope,
               const std::vector<ConvStage>& stages, Var x, int64_t c_in,
               int64_t c_out, int64_t stride) {
  int64_t c = c_in;
  for (const ConvStage& st : stages) {
    x = conv_stage_forward(tape, ctx, scope + "/" + st.name, st, x, c, c_out,
                           stride);
    if (!st.depthwise) c = c_out;
  }
  return x;
}

Var zeros_for(Tape& tape, const Tensor& like, int64_t c_out, int64_t stride) {
  const int64_t N = like.dim(0);
  const int64_t Ho = conv_out_extent(like.dim(2), 1, 0, stride, 1);
  const int64_t Wo = conv_out_extent(like.dim(3), 1, 0, stride, 1);
  return tape.input(Tensor({N, c_out, Ho, Wo}));
}

Var concat_channels(Tape& tape, const std::vector<Var>& parts) {
  FTNAS_CHECK(!parts.empty(), "concat of nothing");
  const Tensor& first = tape.value(parts[0]);
  const int64_t N = first.dim(0), H = first.dim(2), W = first.dim(3);
  int64_t Ctot = 0;
  std::vector<int64_t> offsets;
  for (const Var& v : parts) {
    offsets.push_back(Ctot);
    Ctot += tape.value(v).dim(1);
  }
  Tensor out({N, Ctot, H, W});
  double* op = out.mutable_data();
  for (size_t i = 0; i < parts.size(); ++i) {
    const Tensor& t = tape.value(parts[i]);
    const int64_t C = t.dim(1);
    for (int64_t n = 0; n < N; ++n) {
      const double* src = t.data() + n * C * H * W;
      double* dst = op + (n * Ctot + offsets[i]) * H * W;
      std::copy(src, src + C * H * W, dst);
    }
  }
  std::vector<int64_t> channels;
  for (const Var& v : parts) channels.push_back(tape.value(v).dim(1));
  return tape.record(std::move(out), parts, [=](Tape& tp, const Tensor& gy) {
    for (size_t i = 0; i < parts.size(); ++i) {
      const int64_t C = channels[i];
      Tensor g({N, C, H, W});
      double* gp = g.mutable_data();
      for (int64_t n = 0; n < N; ++n) {
        const double* src = gy.data() + (n * Ctot + offsets[i]) * H * W;
        std::copy(src, src + C * H * W, gp + n * C * H * W);
      }
      tp.accumulate(parts[i], std::move(g));
    }
  });
}

Var node_sum(Tape& tape, Var a, Var b, const ForwardOptions& opt) {
  Var y = ops::add(a, b);
  if (opt.quantize) {
    QuantSpec fq = feature_spec_for(tape.value(y), opt);
    y = ops::quantize_ste(y, fq);
  }
  return y;
}

}  // namespace

Var primitive_forward(Tape& tape, PrimitiveCtx& ctx, const std::string& scope,
                      PrimitiveKind kind, Var x, int64_t c_in, int64_t c_out,
                      int64_t stride) {
  ForwardOptions& opt = *ctx.opt;
  Var y;
  switch (kind) {
    case PrimitiveKind::None:
      y = zeros_for(tape, tape.value(x), c_out, stride);
      break;
    case PrimitiveKind::SkipConnect:
      if (stride == 1) {
        FTNAS_CHECK(c_in == c_out, "identity skip with channel change");
        y = x;
      } else {
        y = run_stages(tape, ctx, scope, conv_stages(kind, stride), x, c_in,
                       c_out, stride);
      }
      break;
    case PrimitiveKind::AvgPool3x3: {
      FTNAS_CHECK(c_in == c_out, "pooling with channel change");
      y = ops::avgpool3x3(x, stride);
      if (opt.quantize) y = quantize_feature(tape, y, opt);
      break;
    }
    case PrimitiveKind::MaxPool3x3:
      FTNAS_CHECK(c_in == c_out, "pooling with channel change");
      y = ops::maxpool3x3(x, stride);  // max of on-grid values stays on grid
      break;
    default:
      y = run_stages(tape, ctx, scope, conv_stages(kind, stride), x, c_in,
                     c_out, stride);
      break;
  }
  if (!tape.value(y).all_finite())
    throw DivergenceError("non-finite activation in " + scope + " (" +
                          to_string(kind) + std::string(")"));
  return y;
}

CandidateNet assemble(SuperNet& net, const Rollout& rollout) {
  net.spec().space.validate(rollout);
  return CandidateNet{&net, rollout};
}

namespace {

Var cell_forward(Tape& tape, PrimitiveCtx& ctx, const std::string& scope,
                 const CellTopology& topo, Var s0, Var s1, int64_t C,
                 bool reduction) {
  std::vector<Var> states{s0, s1};
  for (size_t j = 0; j < topo.blocks.size(); ++j) {
    const Block& b = topo.blocks[j];
    auto edge = [&](int in, PrimitiveKind op) {
      const int64_t stride = (reduction && in < 2) ? 2 : 1;
      std::ostringstream es;
      es << scope << "/n" << j + 2 << "/from" << in << "/" << to_string(op);
      return primitive_forward(tape, ctx, es.str(), op,
                               states[static_cast<size_t>(in)], C, C, stride);
    };
    Var sum = node_sum(tape, edge(b.in1, b.op1), edge(b.in2, b.op2), *ctx.opt);
    states.push_back(sum);
  }
  return concat_channels(tape,
                         {states.begin() + 2, states.end()});
}

Var head_forward(Tape& tape, PrimitiveCtx& ctx, Var feat, int64_t c_feat,
                 int64_t classes) {
  ParamStore& store = *ctx.store;
  ForwardOptions& opt = *ctx.opt;
  Var pooled = ops::global_avgpool(feat);
  if (opt.quantize) pooled = quantize_feature(tape, pooled, opt);

  Tensor& w =
      store.param("head/w", {classes, c_feat}, InitKind::XavierNormal, c_feat);
  Tensor& b = store.param("head/b", {classes}, InitKind::Zeros);
  Var wv = tape.param("head/w", w);
  Var bv = tape.param("head/b", b);
  if (opt.quantize) {
    QuantSpec wq{opt.weight_bits,
                 find_frac_len(w, opt.weight_bits, opt.weight_scheme),
                 opt.weight_scheme};
    wv = ops::quantize_ste(wv, wq);
    if (is_weight_fault(opt.fault.kind))
      wv = apply_weight_fault_op(tape, wv, "head/w", wq, opt);
  }
  Var logits = ops::linear(pooled, wv, bv);
  int l_feat = 0;
  if (opt.quantize) logits = quantize_feature(tape, logits, opt, &l_feat);
  if (opt.fault.kind == FaultKind::MiBB && opt.fault.apply_to_fc)
    logits = inject_feature_fault(tape, logits, "head", c_feat, 1, l_feat, opt);
  if (!tape.value(logits).all_finite())
    throw DivergenceError("non-finite logits in head");
  return logits;
}

}  // namespace

Var candidate_forward(const CandidateNet& c, Tape& tape, const Tensor& batch,
                      ForwardOptions& opt) {
  FTNAS_CHECK(c.net != nullptr, "unassembled candidate");
  const NetworkSpec& spec = c.net->spec();
  FTNAS_CHECK(batch.ndim() == 4 && batch.dim(1) == spec.in_channels,
              "batch must be [N," << spec.in_channels << ",H,W], got "
                                  << shape_str(batch.shape()));
  PrimitiveCtx ctx{&c.net->store(), &opt};

  Tensor input = opt.quantize
                     ? quantize(batch, feature_spec_for(batch, opt))
                     : batch;
  Var x = tape.input(std::move(input));

  ConvStage stem{"conv", 3, 1, false, false, false, true, false};
  int64_t C = spec.base_channels;
  Var cur = conv_stage_forward(tape, ctx, "stem", stem, x, spec.in_channels, C,
                               1);

  const std::vector<int> red = spec.reduction_positions();
  Var prev_prev = cur;
  Var prev = cur;
  int64_t c_prev_prev = C, c_prev = C;
  for (int ci = 0; ci < spec.num_cells; ++ci) {
    const bool reduction =
        std::find(red.begin(), red.end(), ci) != red.end();
    if (reduction)
      C = spec.multiply_on_reduction ? C * 2 : C + spec.channel_growth;
    const std::string scope =
        (reduction ? "rcell" : "ncell") + std::to_string(ci);
    const int64_t hw0 = tape.value(prev_prev).dim(2);
    const int64_t hw1 = tape.value(prev).dim(2);
    Var s0 = run_stages(tape, ctx, scope + "/pre0",
                        preprocess_stages(spec.preprocess), prev_prev,
                        c_prev_prev, C, hw0 != hw1 ? 2 : 1);
    Var s1 = run_stages(tape, ctx, scope + "/pre1",
                        preprocess_stages(spec.preprocess), prev, c_prev, C, 1);
    Var out = cell_forward(tape, ctx, scope,
                           reduction ? c.rollout.reduce : c.rollout.normal, s0,
                           s1, C, reduction);
    prev_prev = prev;
    c_prev_prev = c_prev;
    prev = out;
    c_prev = C * spec.space.blocks_per_cell();
  }
  return head_forward(tape, ctx, prev, c_prev, spec.num_classes);
}

// ---------------------------------------------------------------------------
// Cost accounting

namespace {

int64_t stages_params(const std::vector<ConvStage>& stages, int64_t c_in,
                      int64_t c_out) {
  int64_t total = 0;
  int64_t c = c_in;
  for (const ConvStage& s : stages) {
    total += conv_stage_params(s, c, c_out);
    if (!s.depthwise) c = c_out;
  }
  return total;
}

int64_t stages_flops(const std::vector<ConvStage>& stages, int64_t c_in,
                     int64_t c_out, int64_t ho, int64_t wo) {
  int64_t total = 0;
  int64_t c = c_in;
  for (const ConvStage& s : stages) {
    total += conv_stage_flops(s, c, c_out, ho, wo);
    if (!s.depthwise) c = c_out;
  }
  return total;
}

}  // namespace

NetCost candidate_cost(const CandidateNet& c, int input_hw) {
  const NetworkSpec& spec = c.net->spec();
  NetCost cost;
  int64_t hw = input_hw;
  int64_t C = spec.base_channels;

  ConvStage stem{"conv", 3, 1, false, false, false, true, false};
  cost.params += conv_stage_params(stem, spec.in_channels, C);
  cost.flops += conv_stage_flops(stem, spec.in_channels, C, hw, hw);

  const std::vector<int> red = spec.reduction_positions();
  int64_t c_prev_prev = C, c_prev = C;
  int64_t hw_prev = hw;
  for (int ci = 0; ci < spec.num_cells; ++ci) {
    const bool reduction = std::find(red.begin(), red.end(), ci) != red.end();
    if (reduction)
      C = spec.multiply_on_reduction ? C * 2 : C + spec.channel_growth;
    const auto pre = preprocess_stages(spec.preprocess);
    cost.params += stages_params(pre, c_prev_prev, C);
    cost.flops += stages_flops(pre, c_prev_prev, C, hw_prev, hw_prev);
    cost.params += stages_params(pre, c_prev, C);
    cost.flops += stages_flops(pre, c_prev, C, hw_prev, hw_prev);

    const int64_t hw_out = reduction ? hw_prev / 2 : hw_prev;
    const CellTopology& topo =
        reduction ? c.rollout.reduce : c.rollout.normal;
    // Distinct (node, input, op) edges own one set of weights each.
    std::vector<std::tuple<int, int, PrimitiveKind>> seen;
    for (size_t j = 0; j < topo.blocks.size(); ++j) {
      const Block& b = topo.blocks[j];
      for (auto [in, op] : {std::pair{b.in1, b.op1}, std::pair{b.in2, b.op2}}) {
        const int64_t stride = (reduction && in < 2) ? 2 : 1;
        const int64_t p =
            primitive_param_count(op, C, C, stride);
        const auto key = std::make_tuple(static_cast<int>(j), in, op);
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
          seen.push_back(key);
          cost.params += p;
          cost.op_params += p;
        }
        cost.flops += primitive_flops(op, C, C, hw_out, hw_out, stride);
      }
      cost.flops += C * hw_out * hw_out;  // node add
    }
    c_prev_prev = c_prev;
    c_prev = C * spec.space.blocks_per_cell();
    hw_prev = hw_out;
  }

  const int64_t c_feat = c_prev;
  cost.params += spec.num_classes * c_feat + spec.num_classes;
  cost.flops += c_feat * hw_prev * hw_prev;  // global pool
  cost.flops += spec.num_classes * c_feat + spec.num_classes;
  return cost;
}

// ---------------------------------------------------------------------------
// Stacked nets

StackNetSpec StackNetSpec::uniform(PrimitiveKind k, int depth, int channels,
                                   std::vector<int> reduce_at, int in_channels,
                                   int num_classes) {
  StackNetSpec s;
  s.channels = channels;
  s.in_channels = in_channels;
  s.num_classes = num_classes;
  for (int i = 0; i < depth; ++i) {
    s.blocks.push_back({k});
    s.strides.push_back(
        std::find(reduce_at.begin(), reduce_at.end(), i) != reduce_at.end() ? 2
                                                                            : 1);
  }
  return s;
}

Var StackNet::forward(Tape& tape, const Tensor& batch, ForwardOptions& opt,
                      const std::vector<int>& choices) {
  PrimitiveCtx ctx{&store_, &opt};
  Tensor input = opt.quantize
                     ? quantize(batch, feature_spec_for(batch, opt))
                     : batch;
  Var x = tape.input(std::move(input));
  ConvStage stem{"conv", 3, 1, false, false, false, true, false};
  const int64_t C = spec_.channels;
  Var cur =
      conv_stage_forward(tape, ctx, "stem", stem, x, spec_.in_channels, C, 1);
  FTNAS_CHECK(choices.size() == spec_.blocks.size(),
              "need one choice per block");
  for (size_t i = 0; i < spec_.blocks.size(); ++i) {
    const int pick = choices[i];
    FTNAS_CHECK(pick >= 0 && pick < static_cast<int>(spec_.blocks[i].size()),
                "block " << i << " choice " << pick << " out of range");
    const PrimitiveKind op = spec_.blocks[i][static_cast<size_t>(pick)];
    std::ostringstream scope;
    scope << "block" << i << "/" << to_string(op);
    cur = primitive_forward(tape, ctx, scope.str(), op, cur, C, C,
                            spec_.strides[i]);
  }
  return head_forward(tape, ctx, cur, C, spec_.num_classes);
}

}  // namespace ftnas
