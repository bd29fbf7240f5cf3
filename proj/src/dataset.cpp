#include "ftnas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ftnas/check.hpp"

namespace ftnas {

namespace {

constexpr int64_t kCifarRecord = 3073;  // 1 label byte + 3 * 1024 pixels
constexpr double kCifarMean[3] = {0.4914, 0.4822, 0.4465};
constexpr double kCifarStd[3] = {0.2470, 0.2435, 0.2616};

void read_cifar_file(const std::string& path, std::vector<double>* pixels,
                     std::vector<int>* labels) {
  std::ifstream f(path, std::ios::binary);
  FTNAS_CHECK(f.good(), "cannot open " << path);
  f.seekg(0, std::ios::end);
  const int64_t bytes = static_cast<int64_t>(f.tellg());
  f.seekg(0);
  FTNAS_CHECK(bytes > 0 && bytes % kCifarRecord == 0,
              path << " has " << bytes << " bytes, not a multiple of "
                   << kCifarRecord << " (truncated or corrupt)");
  const int64_t records = bytes / kCifarRecord;
  std::vector<unsigned char> raw(static_cast<size_t>(bytes));
  f.read(reinterpret_cast<char*>(raw.data()), bytes);
  FTNAS_CHECK(f.gcount() == bytes, "short read on " << path);
  for (int64_t r = 0; r < records; ++r) {
    const unsigned char* rec = raw.data() + r * kCifarRecord;
    const int label = rec[0];
    FTNAS_CHECK(label >= 0 && label <= 9, "label byte " << label << " out of range in " << path);
    labels->push_back(label);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 1024; ++i)
        pixels->push_back(
            (static_cast<double>(rec[1 + c * 1024 + i]) / 255.0 - kCifarMean[c]) /
            kCifarStd[c]);
  }
}

Dataset load_cifar10(const DatasetSpec& spec) {
  namespace fs = std::filesystem;
  Dataset d;
  d.classes = 10;
  std::vector<double> train_px, test_px;
  for (int i = 1; i <= 5; ++i) {
    const std::string path =
        (fs::path(spec.root) / ("data_batch_" + std::to_string(i) + ".bin"))
            .string();
    if (fs::exists(path)) read_cifar_file(path, &train_px, &d.train_labels);
  }
  FTNAS_CHECK(!d.train_labels.empty(),
              "no data_batch_*.bin files under " << spec.root);
  read_cifar_file((fs::path(spec.root) / "test_batch.bin").string(), &test_px,
                  &d.test_labels);
  const int64_t ntr = static_cast<int64_t>(d.train_labels.size());
  const int64_t nte = static_cast<int64_t>(d.test_labels.size());
  d.train_images = Tensor({ntr, 3, 32, 32}, std::move(train_px));
  d.test_images = Tensor({nte, 3, 32, 32}, std::move(test_px));
  return d;
}

void render_blob(double* img, int hw, int channels, double cx, double cy,
                 double radius, double gain) {
  for (int c = 0; c < channels; ++c) {
    const double cg = gain * (1.0 + 0.25 * c);
    for (int y = 0; y < hw; ++y)
      for (int x = 0; x < hw; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img[(c * hw + y) * hw + x] += cg * std::exp(-d2 / (2.0 * radius * radius));
      }
  }
}

// Each class is a pair of Gaussian blobs at class-specific positions on a
// ring; position jitter and pixel noise give intra-class variation.
Dataset load_blobs(const DatasetSpec& spec) {
  Dataset d;
  d.classes = spec.classes;
  const int hw = spec.image_hw;
  const int ch = spec.channels;
  RngStream root(spec.seed);

  auto make_split = [&](const char* name, int count, Tensor* images,
                        std::vector<int>* labels) {
    *images = Tensor({count, ch, hw, hw});
    double* px = images->mutable_data();
    RngStream split = root.derive(name);
    for (int i = 0; i < count; ++i) {
      const int label = i % spec.classes;
      labels->push_back(label);
      SequentialRng rng(split.derive(static_cast<uint64_t>(i)));
      double* img = px + static_cast<int64_t>(i) * ch * hw * hw;
      const double angle =
          2.0 * std::numbers::pi * label / spec.classes + 0.25 * rng.normal();
      const double r0 = 0.30 * hw;
      const double cx = hw / 2.0 + r0 * std::cos(angle) + 0.5 * rng.normal();
      const double cy = hw / 2.0 + r0 * std::sin(angle) + 0.5 * rng.normal();
      render_blob(img, hw, ch, cx, cy, 0.11 * hw, 2.0);
      // opposing secondary blob breaks rotational ambiguity
      render_blob(img, hw, ch, hw - cx, hw - cy, 0.09 * hw, -1.2);
      for (int64_t p = 0; p < static_cast<int64_t>(ch) * hw * hw; ++p)
        img[p] += spec.noise * rng.normal();
    }
  };
  make_split("train", spec.train_count, &d.train_images, &d.train_labels);
  make_split("test", spec.test_count, &d.test_images, &d.test_labels);
  return d;
}

uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  FTNAS_CHECK(f.good(), "short read on " << path);
  return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
         (static_cast<uint32_t>(b[2]) << 8) | b[3];
}

void read_idx_pair(const std::string& images_path, const std::string& labels_path,
                   Tensor* images, std::vector<int>* labels) {
  std::ifstream fi(images_path, std::ios::binary);
  FTNAS_CHECK(fi.good(), "cannot open " << images_path);
  FTNAS_CHECK(read_be32(fi, images_path) == 2051,
              images_path << " is not an idx3-ubyte image file");
  const int64_t n = read_be32(fi, images_path);
  const int64_t rows = read_be32(fi, images_path);
  const int64_t cols = read_be32(fi, images_path);
  std::vector<unsigned char> raw(static_cast<size_t>(n * rows * cols));
  fi.read(reinterpret_cast<char*>(raw.data()), static_cast<int64_t>(raw.size()));
  FTNAS_CHECK(fi.gcount() == static_cast<int64_t>(raw.size()),
              "truncated image payload in " << images_path);

  std::ifstream fl(labels_path, std::ios::binary);
  FTNAS_CHECK(fl.good(), "cannot open " << labels_path);
  FTNAS_CHECK(read_be32(fl, labels_path) == 2049,
              labels_path << " is not an idx1-ubyte label file");
  FTNAS_CHECK(static_cast<int64_t>(read_be32(fl, labels_path)) == n,
              "image/label count mismatch");
  std::vector<unsigned char> lab(static_cast<size_t>(n));
  fl.read(reinterpret_cast<char*>(lab.data()), n);
  FTNAS_CHECK(fl.gcount() == n, "truncated label payload in " << labels_path);

  *images = Tensor({n, 1, rows, cols});
  double* px = images->mutable_data();
  for (size_t i = 0; i < raw.size(); ++i)
    px[i] = (static_cast<double>(raw[i]) / 255.0 - 0.1307) / 0.3081;
  for (unsigned char l : lab) labels->push_back(l);
}

Dataset load_mnist_like(const DatasetSpec& spec) {
  namespace fs = std::filesystem;
  Dataset d;
  d.classes = spec.classes;
  read_idx_pair((fs::path(spec.root) / "train-images-idx3-ubyte").string(),
                (fs::path(spec.root) / "train-labels-idx1-ubyte").string(),
                &d.train_images, &d.train_labels);
  read_idx_pair((fs::path(spec.root) / "t10k-images-idx3-ubyte").string(),
                (fs::path(spec.root) / "t10k-labels-idx1-ubyte").string(),
                &d.test_images, &d.test_labels);
  int max_label = 0;
  for (int l : d.train_labels) max_label = std::max(max_label, l);
  d.classes = max_label + 1;
  return d;
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec) {
  FTNAS_CHECK(spec.classes >= 2, "need at least two classes");
  if (spec.kind == "cifar10-binary") return load_cifar10(spec);
  if (spec.kind == "synthetic-blobs") return load_blobs(spec);
  if (spec.kind == "mnist-like") return load_mnist_like(spec);
  FTNAS_CHECK(false, "unknown dataset kind '" << spec.kind << "'");
}

std::vector<std::vector<int64_t>> make_batches(int64_t n, int64_t batch_size,
                                               const RngStream& rng) {
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  // Fisher-Yates with counter-based draws
  for (int64_t i = n - 1; i > 0; --i) {
    const int64_t j = rng.uniform_int(static_cast<uint64_t>(i),
                                      static_cast<uint32_t>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<std::vector<int64_t>> batches;
  for (int64_t at = 0; at < n; at += batch_size) {
    const int64_t end = std::min(n, at + batch_size);
    batches.emplace_back(order.begin() + at, order.begin() + end);
  }
  return batches;
}

Tensor gather_images(const Tensor& images, const std::vector<int64_t>& idx) {
  const int64_t C = images.dim(1), H = images.dim(2), W = images.dim(3);
  const int64_t stride = C * H * W;
  Tensor out({static_cast<int64_t>(idx.size()), C, H, W});
  double* op = out.mutable_data();
  for (size_t i = 0; i < idx.size(); ++i) {
    const double* src = images.data() + idx[i] * stride;
    std::copy(src, src + stride, op + static_cast<int64_t>(i) * stride);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<int64_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int64_t i : idx) out.push_back(labels[static_cast<size_t>(i)]);
  return out;
}

Tensor augment_batch(const Tensor& images, const RngStream& rng) {
  const int64_t N = images.dim(0), C = images.dim(1), H = images.dim(2),
                W = images.dim(3);
  const int64_t pad = 2;
  Tensor out(images.shape());
  double* op = out.mutable_data();
  for (int64_t n = 0; n < N; ++n) {
    SequentialRng r(rng.derive(static_cast<uint64_t>(n)));
    const int64_t dy =
        static_cast<int64_t>(r.uniform_int(static_cast<uint32_t>(2 * pad + 1))) - pad;
    const int64_t dx =
        static_cast<int64_t>(r.uniform_int(static_cast<uint32_t>(2 * pad + 1))) - pad;
    const bool flip = r.bernoulli(0.5);
    for (int64_t c = 0; c < C; ++c) {
      const double* src = images.data() + (n * C + c) * H * W;
      double* dst = op + (n * C + c) * H * W;
      for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
          const int64_t sy = y + dy;
          int64_t sx = x + dx;
          if (flip) sx = W - 1 - sx;
          dst[y * W + x] = (sy >= 0 && sy < H && sx >= 0 && sx < W)
                               ? src[sy * W + sx]
                               : 0.0;
        }
    }
  }
  return out;
}

}  // namespace ftnas
