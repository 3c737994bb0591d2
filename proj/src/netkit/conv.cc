#include "mprs/netkit/conv.h"

#include <cmath>

#include "mprs/errors.h"

namespace mprs {

Tensor Im2Col(const Tensor& x, const ConvGeometry& g) {
  const ImageShape& in = g.input;
  if (x.cols() != in.size()) {
    throw DimensionError("im2col: rows of " + std::to_string(x.cols()) + " values for a " +
                         std::to_string(in.height) + "x" + std::to_string(in.width) + "x" +
                         std::to_string(in.channels) + " image");
  }
  if (g.kernel == 0 || g.stride == 0 || in.height + 2 * g.padding < g.kernel ||
      in.width + 2 * g.padding < g.kernel) {
    throw DimensionError("im2col: kernel does not fit the padded image");
  }
  const std::size_t b = x.rows(), oh = g.out_height(), ow = g.out_width(), p = g.patch_size();
  const std::size_t rows = b * oh * ow;
  // Source index of each output cell, or npos for padding.
  std::vector<std::size_t> src(rows * p, std::string::npos);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t row = (n * oh + oy) * ow + ox;
        for (std::size_t ky = 0; ky < g.kernel; ++ky)
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                     static_cast<std::ptrdiff_t>(g.padding);
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (y < 0 || xx < 0 || y >= static_cast<std::ptrdiff_t>(in.height) ||
                xx >= static_cast<std::ptrdiff_t>(in.width))
              continue;
            for (std::size_t c = 0; c < in.channels; ++c) {
              src[row * p + (ky * g.kernel + kx) * in.channels + c] =
                  n * in.size() + (static_cast<std::size_t>(y) * in.width + xx) * in.channels + c;
            }
          }
      }
  auto xv = x.data();
  std::vector<double> out(rows * p, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (src[i] != std::string::npos) out[i] = xv[src[i]];
  return MakeOp(rows, p, std::move(out), {x},
                [src = std::move(src)](std::span<const double> grad, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < grad.size(); ++i)
                    if (src[i] != std::string::npos) in[0][src[i]] += grad[i];
                });
}

Conv2d::Conv2d(std::string name, const ConvGeometry& geometry, std::size_t out_channels, Rng& rng)
    : name_(std::move(name)), geometry_(geometry) {
  const std::size_t p = geometry.patch_size();
  // He-uniform for the ReLU.
  const double limit = std::sqrt(6.0 / static_cast<double>(p));
  std::vector<double> w(p * out_channels);
  for (double& v : w) v = rng.Uniform(-limit, limit);
  weight_ = Tensor::Variable(p, out_channels, std::move(w));
  bias_ = Tensor::Variable(1, out_channels, std::vector<double>(out_channels, 0.0));
}

ImageShape Conv2d::output_shape() const {
  return {geometry_.out_height(), geometry_.out_width(), weight_.cols()};
}

Tensor Conv2d::Forward(const Tensor& x) const {
  Tensor cols = Im2Col(x, geometry_);
  Tensor y = Relu(Add(MatMul(cols, weight_), bias_));
  return Reshape(y, x.rows(), output_shape().size());
}

ParamList Conv2d::Parameters() const {
  return {{name_ + ".weight", weight_}, {name_ + ".bias", bias_}};
}

}  // namespace mprs
