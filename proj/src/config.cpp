#include "ftnas/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ftnas/check.hpp"
#include "json.hpp"

namespace ftnas {

using nlohmann::json;

namespace {

// Strict field reader: every present key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    FTNAS_CHECK(j.is_object(), where_ << " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T* out) {
    seen_.insert(key);
    if (j_.contains(key)) *out = j_.at(key).get<T>();
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, value] : j_.items())
      FTNAS_CHECK(seen_.count(key), "unknown key '" << key << "' in " << where_);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json quant_spec_to_json(const QuantSpec& q) {
  return json{{"bit_width", q.bit_width},
              {"frac_len", q.frac_len},
              {"scheme", to_string(q.scheme)}};
}

QuantSpec quant_spec_from_json(const json& j, const std::string& where) {
  QuantSpec q;
  Fields f(j, where);
  f.get("bit_width", &q.bit_width);
  f.get("frac_len", &q.frac_len);
  std::string scheme = to_string(q.scheme);
  f.get("scheme", &scheme);
  q.scheme = quant_scheme_from_string(scheme);
  return q;
}

json fault_to_json(const FaultModelSpec& s) {
  return json{{"kind", to_string(s.kind)}, {"p", s.p},
              {"p_m", s.p_m},             {"p0", s.p0},
              {"p1", s.p1},               {"sigma", s.sigma},
              {"quant", quant_spec_to_json(s.quant)},
              {"apply_to_fc", s.apply_to_fc}};
}

FaultModelSpec fault_from_json(const json& j, const std::string& where) {
  FaultModelSpec s;
  Fields f(j, where);
  std::string kind = to_string(s.kind);
  f.get("kind", &kind);
  s.kind = fault_kind_from_string(kind);
  f.get("p", &s.p);
  f.get("p_m", &s.p_m);
  f.get("p0", &s.p0);
  f.get("p1", &s.p1);
  f.get("sigma", &s.sigma);
  if (f.has("quant")) s.quant = quant_spec_from_json(f.sub("quant"), where + ".quant");
  f.get("apply_to_fc", &s.apply_to_fc);
  s.validate();
  return s;
}

json quant_cfg_to_json(const QuantConfig& q) {
  return json{{"enabled", q.enabled},
              {"weight_bits", q.weight_bits},
              {"feature_bits", q.feature_bits},
              {"weight_scheme", to_string(q.weight_scheme)}};
}

QuantConfig quant_cfg_from_json(const json& j, const std::string& where) {
  QuantConfig q;
  Fields f(j, where);
  f.get("enabled", &q.enabled);
  f.get("weight_bits", &q.weight_bits);
  f.get("feature_bits", &q.feature_bits);
  std::string scheme = to_string(q.weight_scheme);
  f.get("weight_scheme", &scheme);
  q.weight_scheme = quant_scheme_from_string(scheme);
  return q;
}

json space_to_json(const SpaceSpec& s) {
  std::vector<std::string> prims;
  for (PrimitiveKind k : s.primitives) prims.emplace_back(to_string(k));
  return json{{"num_nodes", s.num_nodes}, {"primitives", prims}};
}

SpaceSpec space_from_json(const json& j, const std::string& where) {
  SpaceSpec s;
  Fields f(j, where);
  f.get("num_nodes", &s.num_nodes);
  if (f.has("primitives")) {
    s.primitives.clear();
    for (const auto& name : f.sub("primitives"))
      s.primitives.push_back(primitive_from_string(name.get<std::string>()));
    FTNAS_CHECK(!s.primitives.empty(), where << ".primitives is empty");
  }
  FTNAS_CHECK(s.num_nodes >= 3, where << ".num_nodes must be >= 3");
  return s;
}

json network_to_json(const NetworkSpec& n) {
  return json{{"space", space_to_json(n.space)},
              {"num_cells", n.num_cells},
              {"base_channels", n.base_channels},
              {"channel_growth", n.channel_growth},
              {"multiply_on_reduction", n.multiply_on_reduction},
              {"in_channels", n.in_channels},
              {"num_classes", n.num_classes},
              {"preprocess", n.preprocess}};
}

NetworkSpec network_from_json(const json& j, const std::string& where) {
  NetworkSpec n;
  Fields f(j, where);
  if (f.has("space")) n.space = space_from_json(f.sub("space"), where + ".space");
  f.get("num_cells", &n.num_cells);
  f.get("base_channels", &n.base_channels);
  f.get("channel_growth", &n.channel_growth);
  f.get("multiply_on_reduction", &n.multiply_on_reduction);
  f.get("in_channels", &n.in_channels);
  f.get("num_classes", &n.num_classes);
  f.get("preprocess", &n.preprocess);
  return n;
}

json dataset_to_json(const DatasetSpec& d) {
  return json{{"kind", d.kind},         {"root", d.root},
              {"classes", d.classes},   {"image_hw", d.image_hw},
              {"channels", d.channels}, {"train_count", d.train_count},
              {"test_count", d.test_count}, {"noise", d.noise},
              {"augment", d.augment},   {"seed", d.seed}};
}

DatasetSpec dataset_from_json(const json& j, const std::string& where) {
  DatasetSpec d;
  Fields f(j, where);
  f.get("kind", &d.kind);
  f.get("root", &d.root);
  f.get("classes", &d.classes);
  f.get("image_hw", &d.image_hw);
  f.get("channels", &d.channels);
  f.get("train_count", &d.train_count);
  f.get("test_count", &d.test_count);
  f.get("noise", &d.noise);
  f.get("augment", &d.augment);
  f.get("seed", &d.seed);
  return d;
}

json train_to_json(const TrainConfig& t) {
  return json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"lr", t.lr},
              {"momentum", t.momentum},
              {"weight_decay", t.weight_decay},
              {"alpha_l", t.alpha_l},
              {"fault", fault_to_json(t.fault)},
              {"quant", quant_cfg_to_json(t.quant)},
              {"mibb_saturate", t.mibb_saturate},
              {"weight_grad", t.weight_grad},
              {"rate_candidates", t.rate_candidates},
              {"rate_accuracy_floor", t.rate_accuracy_floor}};
}

TrainConfig train_from_json(const json& j, const std::string& where) {
  TrainConfig t;
  Fields f(j, where);
  f.get("epochs", &t.epochs);
  f.get("batch_size", &t.batch_size);
  f.get("lr", &t.lr);
  f.get("momentum", &t.momentum);
  f.get("weight_decay", &t.weight_decay);
  f.get("alpha_l", &t.alpha_l);
  if (f.has("fault")) t.fault = fault_from_json(f.sub("fault"), where + ".fault");
  if (f.has("quant")) t.quant = quant_cfg_from_json(f.sub("quant"), where + ".quant");
  f.get("mibb_saturate", &t.mibb_saturate);
  f.get("weight_grad", &t.weight_grad);
  f.get("rate_candidates", &t.rate_candidates);
  f.get("rate_accuracy_floor", &t.rate_accuracy_floor);
  FTNAS_CHECK(t.alpha_l >= 0.0 && t.alpha_l <= 1.0, "alpha_l outside [0,1]");
  weight_grad_from_string(t.weight_grad);
  return t;
}

json search_to_json(const SearchRunConfig& s) {
  return json{{"epochs", s.epochs},
              {"batch_size", s.batch_size},
              {"lr_w", s.lr_w},
              {"momentum", s.momentum},
              {"weight_decay", s.weight_decay},
              {"lr_theta", s.lr_theta},
              {"baseline_momentum", s.baseline_momentum},
              {"entropy_coef", s.entropy_coef},
              {"alpha_r", s.alpha_r},
              {"alpha_l", s.alpha_l},
              {"train_fraction", s.train_fraction},
              {"controller_hidden", s.controller_hidden},
              {"controller_embed", s.controller_embed},
              {"fault", fault_to_json(s.fault)},
              {"quant", quant_cfg_to_json(s.quant)},
              {"mibb_saturate", s.mibb_saturate}};
}

SearchRunConfig search_from_json(const json& j, const std::string& where) {
  SearchRunConfig s;
  Fields f(j, where);
  f.get("epochs", &s.epochs);
  f.get("batch_size", &s.batch_size);
  f.get("lr_w", &s.lr_w);
  f.get("momentum", &s.momentum);
  f.get("weight_decay", &s.weight_decay);
  f.get("lr_theta", &s.lr_theta);
  f.get("baseline_momentum", &s.baseline_momentum);
  f.get("entropy_coef", &s.entropy_coef);
  f.get("alpha_r", &s.alpha_r);
  f.get("alpha_l", &s.alpha_l);
  f.get("train_fraction", &s.train_fraction);
  f.get("controller_hidden", &s.controller_hidden);
  f.get("controller_embed", &s.controller_embed);
  if (f.has("fault")) s.fault = fault_from_json(f.sub("fault"), where + ".fault");
  if (f.has("quant")) s.quant = quant_cfg_from_json(f.sub("quant"), where + ".quant");
  f.get("mibb_saturate", &s.mibb_saturate);
  FTNAS_CHECK(s.alpha_r >= 0.0 && s.alpha_r <= 1.0, "alpha_r outside [0,1]");
  FTNAS_CHECK(s.alpha_l >= 0.0 && s.alpha_l <= 1.0, "alpha_l outside [0,1]");
  FTNAS_CHECK(s.train_fraction > 0.0 && s.train_fraction < 1.0,
              "train_fraction outside (0,1)");
  return s;
}

json sweep_to_json(const SweepRunConfig& s) {
  return json{{"fault_kind", s.fault_kind},
              {"rates", s.rates},
              {"seeds", s.seeds},
              {"saf1_fraction", s.saf1_fraction},
              {"batch_size", s.batch_size}};
}

SweepRunConfig sweep_from_json(const json& j, const std::string& where) {
  SweepRunConfig s;
  Fields f(j, where);
  f.get("fault_kind", &s.fault_kind);
  f.get("rates", &s.rates);
  f.get("seeds", &s.seeds);
  f.get("saf1_fraction", &s.saf1_fraction);
  f.get("batch_size", &s.batch_size);
  fault_kind_from_string(s.fault_kind);
  return s;
}

json baseline_to_json(const BaselineRunConfig& b) {
  return json{{"samples", b.samples}};
}

BaselineRunConfig baseline_from_json(const json& j, const std::string& where) {
  BaselineRunConfig b;
  Fields f(j, where);
  f.get("samples", &b.samples);
  return b;
}

json inspect_to_json(const InspectRunConfig& i) {
  return json{{"primitives", i.primitives},
              {"depth", i.depth},
              {"mixed_blocks", i.mixed_blocks}};
}

InspectRunConfig inspect_from_json(const json& j, const std::string& where) {
  InspectRunConfig i;
  Fields f(j, where);
  f.get("primitives", &i.primitives);
  f.get("depth", &i.depth);
  f.get("mixed_blocks", &i.mixed_blocks);
  for (const std::string& p : i.primitives) primitive_from_string(p);
  return i;
}

}  // namespace

WeightGradMode weight_grad_from_string(const std::string& s) {
  if (s == "straight-through") return WeightGradMode::StraightThrough;
  if (s == "masked") return WeightGradMode::Masked;
  FTNAS_CHECK(false, "unknown weight_grad mode '" << s << "'");
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    FTNAS_CHECK(false, "config is not valid JSON: " << e.what());
  }
  RunConfig cfg;
  Fields f(j, "config");
  f.get("schema_version", &cfg.schema_version);
  FTNAS_CHECK(cfg.schema_version == 1,
              "unsupported schema_version " << cfg.schema_version);
  f.get("seed", &cfg.seed);
  f.get("deterministic", &cfg.deterministic);
  f.get("rollout", &cfg.rollout);
  if (f.has("dataset"))
    cfg.dataset = dataset_from_json(f.sub("dataset"), "dataset");
  if (f.has("network"))
    cfg.network = network_from_json(f.sub("network"), "network");
  if (f.has("train")) cfg.train = train_from_json(f.sub("train"), "train");
  if (f.has("search")) cfg.search = search_from_json(f.sub("search"), "search");
  if (f.has("sweep")) cfg.sweep = sweep_from_json(f.sub("sweep"), "sweep");
  if (f.has("baseline"))
    cfg.baseline = baseline_from_json(f.sub("baseline"), "baseline");
  if (f.has("inspect"))
    cfg.inspect = inspect_from_json(f.sub("inspect"), "inspect");
  if (!cfg.rollout.empty()) Rollout::from_text(cfg.rollout);
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  json j{{"schema_version", cfg.schema_version},
         {"seed", cfg.seed},
         {"deterministic", cfg.deterministic},
         {"rollout", cfg.rollout},
         {"dataset", dataset_to_json(cfg.dataset)},
         {"network", network_to_json(cfg.network)},
         {"train", train_to_json(cfg.train)},
         {"search", search_to_json(cfg.search)},
         {"sweep", sweep_to_json(cfg.sweep)},
         {"baseline", baseline_to_json(cfg.baseline)},
         {"inspect", inspect_to_json(cfg.inspect)}};
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  FTNAS_CHECK(f.good(), "cannot open config " << path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

uint64_t config_hash(const RunConfig& cfg) {
  const std::string canon = serialize_config(cfg);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : canon) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ftnas
