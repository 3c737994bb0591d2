#include "mprs/baselines/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mprs/errors.h"
#include "mprs/netkit/kmeans.h"

namespace mprs {
namespace {

// Half-sample symmetric index for any integer position.
std::size_t Reflect(long p, std::size_t n) {
  const long period = 2 * static_cast<long>(n);
  long m = ((p % period) + period) % period;
  if (m >= static_cast<long>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

template <typename F>
LabeledDataset MapImages(const LabeledDataset& ds, F&& f) {
  LabeledDataset out = ds;
  const std::size_t m = ds.pixels_per_image();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> img = f(ds.image(i));
    std::copy(img.begin(), img.end(), out.pixels.begin() + i * m);
  }
  return out;
}

}  // namespace

void BaselineConfig::Validate() const {
  if (block < 1) throw ConfigError("baseline block must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("baseline radius must be > 0");
  if (k < 1) throw ConfigError("baseline K must be >= 1");
  if (clusters < 1) throw ConfigError("baseline cluster count must be >= 1");
}

std::vector<double> Pixelate(std::span<const double> image, std::size_t height,
                             std::size_t width, std::size_t block) {
  if (image.size() != height * width) throw DimensionError("pixelate: image size mismatch");
  if (block < 1) throw ContractError("pixelate: block must be >= 1");
  std::vector<double> out(image.size());
  for (std::size_t by = 0; by < height; by += block)
    for (std::size_t bx = 0; bx < width; bx += block) {
      const std::size_t ey = std::min(height, by + block), ex = std::min(width, bx + block);
      // Shifted by the first pixel so a constant tile maps to itself exactly.
      const double first = image[by * width + bx];
      double sum = 0.0;
      for (std::size_t y = by; y < ey; ++y)
        for (std::size_t x = bx; x < ex; ++x) sum += image[y * width + x] - first;
      const double mean = first + sum / static_cast<double>((ey - by) * (ex - bx));
      for (std::size_t y = by; y < ey; ++y)
        for (std::size_t x = bx; x < ex; ++x) out[y * width + x] = mean;
    }
  return out;
}

std::vector<double> GaussianKernel(double radius) {
  if (!(radius > 0.0)) throw ContractError("gaussian blur: radius must be > 0");
  const long half = static_cast<long>(std::ceil(3.0 * radius));
  const double coef = -0.5 / (radius * radius);
  std::vector<double> w(2 * half + 1);
  double total = 0.0;
  for (long t = -half; t <= half; ++t) {
    w[t + half] = std::exp(coef * static_cast<double>(t * t));
    total += w[t + half];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

// One strided line, fixed order: center tap, then symmetric pairs from the
// outermost inwards. The golden fixtures depend on this order.
void CorrelateLine(const double* in, double* out, std::size_t n, std::size_t stride,
                   const std::vector<double>& w) {
  const long half = static_cast<long>(w.size() / 2);
  const double* c = w.data() + half;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = in[i * stride] * c[0];
    for (long t = half; t >= 1; --t) {
      const long p = static_cast<long>(i);
      acc += (in[Reflect(p - t, n) * stride] + in[Reflect(p + t, n) * stride]) * c[t];
    }
    out[i * stride] = acc;
  }
}

}  // namespace

std::vector<double> GaussianBlur(std::span<const double> image, std::size_t height,
                                 std::size_t width, double radius) {
  if (image.size() != height * width) throw DimensionError("gaussian blur: image size mismatch");
  const std::vector<double> w = GaussianKernel(radius);
  std::vector<double> tmp(image.size(), 0.0), out(image.size(), 0.0);
  for (std::size_t x = 0; x < width; ++x) CorrelateLine(image.data() + x, tmp.data() + x, height, width, w);
  for (std::size_t y = 0; y < height; ++y)
    CorrelateLine(tmp.data() + y * width, out.data() + y * width, width, 1, w);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

LabeledDataset PixelateDataset(const LabeledDataset& ds, std::size_t block) {
  return MapImages(ds, [&](std::span<const double> img) { return Pixelate(img, ds.height, ds.width, block); });
}

LabeledDataset BlurDataset(const LabeledDataset& ds, double radius) {
  return MapImages(ds, [&](std::span<const double> img) { return GaussianBlur(img, ds.height, ds.width, radius); });
}

KAnonymizeResult KAnonymize(const LabeledDataset& ds, std::size_t k, std::size_t clusters,
                            uint64_t seed) {
  if (k < 1 || clusters < 1) throw ContractError("k-anonymize: K and cluster count must be >= 1");
  if (ds.size() < clusters) {
    throw ContractError("k-anonymize: " + std::to_string(ds.size()) + " samples < " +
                        std::to_string(clusters) + " clusters");
  }
  KMeansOptions ko;
  ko.seed = seed;
  const Tensor points = ds.Images();
  KMeansResult km = KMeans(points, clusters, ko);
  const std::size_t d = points.cols();
  std::vector<std::size_t> size(clusters, 0), rep(clusters, 0);
  std::vector<double> best(clusters, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t c = km.assignment[i];
    ++size[c];
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = points.at(i, j) - km.centers.at(c, j);
      dist += t * t;
    }
    if (dist < best[c]) {  // strict: lowest index wins ties
      best[c] = dist;
      rep[c] = i;
    }
  }
  KAnonymizeResult r;
  r.data.height = ds.height;
  r.data.width = ds.width;
  r.data.split = ds.split;
  r.data.notes = ds.notes;
  for (std::size_t c = 0; c < clusters; ++c) {
    if (size[c] == 0) continue;
    (size[c] >= k ? r.clusters_kept : r.clusters_suppressed) += 1;
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t c = km.assignment[i];
    if (size[c] < k) {
      ++r.suppressed;
      continue;
    }
    auto img = ds.image(rep[c]);
    r.data.pixels.insert(r.data.pixels.end(), img.begin(), img.end());
    r.data.labels.push_back(ds.labels[rep[c]]);
    r.source.push_back(rep[c]);
  }
  return r;
}

LabeledDataset ApplyBaseline(const std::string& method, const LabeledDataset& ds,
                             const BaselineConfig& config, std::vector<std::string>* log) {
  config.Validate();
  if (method == "pixelate") return PixelateDataset(ds, config.block);
  if (method == "blur") return BlurDataset(ds, config.radius);
  if (method == "kanon") {
    KAnonymizeResult r = KAnonymize(ds, config.k, config.clusters, config.seed);
    if (log) {
      log->push_back("k-anonymize: kept " + std::to_string(r.clusters_kept) + " clusters, suppressed " +
                     std::to_string(r.clusters_suppressed) + " clusters (" +
                     std::to_string(r.suppressed) + " samples)");
    }
    return r.data;
  }
  throw ConfigError("unknown baseline method '" + method + "' (expected pixelate, blur or kanon)");
}

}  // namespace mprs
