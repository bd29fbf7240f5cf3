#include "ftnas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ftnas/check.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payload is little-endian");

namespace ftnas {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'N', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
int64_t get_i64(std::istream& is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string get_str(std::istream& is) {
  const uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  FTNAS_CHECK(os.good(), "cannot write " << path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(ckpt.meta.size()));
  put_u32(os, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_str(os, k);
    put_str(os, v);
  }
  for (const auto& [name, t] : ckpt.tensors) {
    put_str(os, name);
    const auto qit = ckpt.qspecs.find(name);
    os.put(qit != ckpt.qspecs.end() ? 1 : 0);
    if (qit != ckpt.qspecs.end()) {
      put_u32(os, static_cast<uint32_t>(qit->second.bit_width));
      put_i64(os, qit->second.frac_len);
      os.put(qit->second.scheme == QuantScheme::RramSymmetric ? 1 : 0);
    }
    put_u32(os, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_i64(os, t.dim(i));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  FTNAS_CHECK(os.good(), "write failed for " << path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  FTNAS_CHECK(is.good(), "cannot open " << path);
  char magic[4];
  is.read(magic, 4);
  FTNAS_CHECK(is.good() && std::memcmp(magic, kMagic, 4) == 0,
              path << " is not a checkpoint container");
  const uint32_t version = get_u32(is);
  FTNAS_CHECK(version == kVersion, "unsupported container version " << version);
  const uint32_t nmeta = get_u32(is);
  const uint32_t ntensor = get_u32(is);
  Checkpoint ckpt;
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = get_str(is);
    ckpt.meta[k] = get_str(is);
  }
  for (uint32_t i = 0; i < ntensor; ++i) {
    const std::string name = get_str(is);
    const int has_q = is.get();
    if (has_q) {
      QuantSpec q;
      q.bit_width = static_cast<int>(get_u32(is));
      q.frac_len = static_cast<int>(get_i64(is));
      q.scheme = is.get() ? QuantScheme::RramSymmetric
                          : QuantScheme::CmosComplement;
      ckpt.qspecs[name] = q;
    }
    const uint32_t ndim = get_u32(is);
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = get_i64(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.mutable_data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    FTNAS_CHECK(is.good(), "truncated tensor payload in " << path);
    ckpt.tensors.emplace(name, std::move(t));
  }
  return ckpt;
}

namespace {

Tensor codes_to_tensor(const std::vector<uint16_t>& v) {
  Tensor t({static_cast<int64_t>(v.size())});
  double* p = t.mutable_data();
  for (size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return t;
}

Tensor bytes_to_tensor(const std::vector<uint8_t>& v) {
  Tensor t({static_cast<int64_t>(v.size())});
  double* p = t.mutable_data();
  for (size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return t;
}

template <typename T>
std::vector<T> tensor_to_ints(const Tensor& t) {
  std::vector<T> v(static_cast<size_t>(t.size()));
  for (int64_t i = 0; i < t.size(); ++i) v[static_cast<size_t>(i)] = static_cast<T>(t[i]);
  return v;
}

}  // namespace

void add_fault_mask(Checkpoint* ckpt, const std::string& prefix,
                    const FaultMask& mask) {
  std::string shape;
  for (size_t i = 0; i < mask.shape.size(); ++i)
    shape += (i ? "," : "") + std::to_string(mask.shape[i]);
  ckpt->meta[prefix + ":kind"] = to_string(mask.kind);
  ckpt->meta[prefix + ":shape"] = shape;
  ckpt->meta[prefix + ":bound"] = std::to_string(mask.bound);
  ckpt->meta[prefix + ":stream_key"] = std::to_string(mask.stream_key);
  ckpt->meta[prefix + ":quant"] = std::to_string(mask.quant.bit_width) + "," +
                                  std::to_string(mask.quant.frac_len) + "," +
                                  to_string(mask.quant.scheme);
  if (!mask.theta.empty())
    ckpt->tensors[prefix + ":theta"] = bytes_to_tensor(mask.theta);
  if (!mask.alpha.empty())
    ckpt->tensors[prefix + ":alpha"] = bytes_to_tensor(mask.alpha);
  if (!mask.beta.empty())
    ckpt->tensors[prefix + ":beta"] = bytes_to_tensor(mask.beta);
  if (!mask.saf_type.empty())
    ckpt->tensors[prefix + ":saf_type"] = bytes_to_tensor(mask.saf_type);
  if (!mask.bit_code.empty())
    ckpt->tensors[prefix + ":bit_code"] = codes_to_tensor(mask.bit_code);
  if (!mask.bit_code2.empty())
    ckpt->tensors[prefix + ":bit_code2"] = codes_to_tensor(mask.bit_code2);
  if (!mask.factor.empty()) {
    Tensor t({static_cast<int64_t>(mask.factor.size())});
    std::copy(mask.factor.begin(), mask.factor.end(), t.mutable_data());
    ckpt->tensors[prefix + ":factor"] = std::move(t);
  }
}

std::optional<FaultMask> extract_fault_mask(const Checkpoint& ckpt,
                                            const std::string& prefix) {
  const auto kind_it = ckpt.meta.find(prefix + ":kind");
  if (kind_it == ckpt.meta.end()) return std::nullopt;
  FaultMask m;
  m.kind = fault_kind_from_string(kind_it->second);
  std::string shape = ckpt.meta.at(prefix + ":shape");
  for (size_t at = 0; at < shape.size();) {
    size_t comma = shape.find(',', at);
    if (comma == std::string::npos) comma = shape.size();
    m.shape.push_back(std::stoll(shape.substr(at, comma - at)));
    at = comma + 1;
  }
  m.bound = std::stod(ckpt.meta.at(prefix + ":bound"));
  m.stream_key = std::stoull(ckpt.meta.at(prefix + ":stream_key"));
  {
    const std::string q = ckpt.meta.at(prefix + ":quant");
    const size_t c1 = q.find(',');
    const size_t c2 = q.find(',', c1 + 1);
    m.quant.bit_width = std::stoi(q.substr(0, c1));
    m.quant.frac_len = std::stoi(q.substr(c1 + 1, c2 - c1 - 1));
    m.quant.scheme = quant_scheme_from_string(q.substr(c2 + 1));
  }
  auto grab = [&](const char* field) -> const Tensor* {
    auto it = ckpt.tensors.find(prefix + ":" + field);
    return it == ckpt.tensors.end() ? nullptr : &it->second;
  };
  if (const Tensor* t = grab("theta")) m.theta = tensor_to_ints<uint8_t>(*t);
  if (const Tensor* t = grab("alpha")) m.alpha = tensor_to_ints<uint8_t>(*t);
  if (const Tensor* t = grab("beta")) m.beta = tensor_to_ints<uint8_t>(*t);
  if (const Tensor* t = grab("saf_type")) m.saf_type = tensor_to_ints<uint8_t>(*t);
  if (const Tensor* t = grab("bit_code")) m.bit_code = tensor_to_ints<uint16_t>(*t);
  if (const Tensor* t = grab("bit_code2"))
    m.bit_code2 = tensor_to_ints<uint16_t>(*t);
  if (const Tensor* t = grab("factor"))
    m.factor.assign(t->data(), t->data() + t->size());
  return m;
}

}  // namespace ftnas
