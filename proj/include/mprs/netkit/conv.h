#ifndef MPRS_NETKIT_CONV_H_
#define MPRS_NETKIT_CONV_H_

#include <cstddef>
#include <string>

#include "mprs/diffcore/tensor.h"
#include "mprs/netkit/mlp.h"
#include "mprs/rng.h"

namespace mprs {

// Images are flattened channel-last: index (y * width + x) * channels + c.
struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::size_t size() const { return height * width * channels; }
};

struct ConvGeometry {
  ImageShape input;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (input.height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (input.width + 2 * padding - kernel) / stride + 1; }
  std::size_t patch_size() const { return kernel * kernel * input.channels; }
};

// B x input.size() -> (B * out_h * out_w) x patch_size, zero padded. Taped.
Tensor Im2Col(const Tensor& x, const ConvGeometry& geometry);

// 2-D convolution with a ReLU, computed as Im2Col followed by a matmul.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, const ConvGeometry& geometry, std::size_t out_channels, Rng& rng);

  // B x input.size() -> B x output_shape().size()
  Tensor Forward(const Tensor& x) const;
  ImageShape output_shape() const;
  const ConvGeometry& geometry() const { return geometry_; }
  ParamList Parameters() const;

 private:
  std::string name_;
  ConvGeometry geometry_;
  Tensor weight_;  // patch_size x out_channels
  Tensor bias_;    // 1 x out_channels
};

}  // namespace mprs

#endif  // MPRS_NETKIT_CONV_H_
