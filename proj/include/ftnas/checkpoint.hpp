#pragma once

#include <map>
#include <optional>
#include <string>

#include "ftnas/fault.hpp"
#include "ftnas/quant.hpp"
#include "ftnas/tensor.hpp"

namespace ftnas {

// Self-describing binary container: magic, version, string metadata, then
// named tensors with optional per-tensor quantization specs. Little-endian
// payload; round trips are bit-exact.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, QuantSpec> qspecs;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Fault masks ride in the same container for exact replay.
void add_fault_mask(Checkpoint* ckpt, const std::string& prefix,
                    const FaultMask& mask);
std::optional<FaultMask> extract_fault_mask(const Checkpoint& ckpt,
                                            const std::string& prefix);

}  // namespace ftnas
