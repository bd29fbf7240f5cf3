#pragma once

#include <string>
#include <vector>

#include "ftnas/rng.hpp"
#include "ftnas/tensor.hpp"

namespace ftnas {

struct DatasetSpec {
  std::string kind = "synthetic-blobs";  // cifar10-binary | synthetic-blobs | mnist-like
  std::string root;                      // directory for file-backed kinds
  int classes = 4;
  int image_hw = 16;
  int channels = 3;
  int train_count = 800;  // synthetic kinds only
  int test_count = 200;
  double noise = 0.35;    // synthetic pixel noise level
  bool augment = false;   // pad-crop + horizontal flip during training
  uint64_t seed = 1;

  bool operator==(const DatasetSpec&) const = default;
};

struct Dataset {
  Tensor train_images;  // [N, C, H, W], normalized
  std::vector<int> train_labels;
  Tensor test_images;
  std::vector<int> test_labels;
  int classes = 0;
};

// CIFAR-10 binary files are parsed record-exactly (1 label byte + 3072 pixel
// bytes); a file whose size is not a multiple of 3073 is rejected.
Dataset load_dataset(const DatasetSpec& spec);

// Deterministic epoch shuffling into batches of row indices.
std::vector<std::vector<int64_t>> make_batches(int64_t n, int64_t batch_size,
                                               const RngStream& rng);

Tensor gather_images(const Tensor& images, const std::vector<int64_t>& idx);
std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<int64_t>& idx);

// Pad-4-crop plus horizontal flip, one independent draw per sample.
Tensor augment_batch(const Tensor& images, const RngStream& rng);

}  // namespace ftnas
