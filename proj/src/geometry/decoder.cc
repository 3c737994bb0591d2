#include "mprs/geometry/decoder.h"

#include <cmath>

#include "mprs/errors.h"

namespace mprs {
namespace {

void CheckLatent(std::size_t cols, std::size_t d) {
  if (cols != d) {
    throw DimensionError("decoder expects latent width " + std::to_string(d) + ", got " +
                         std::to_string(cols));
  }
}

std::size_t LatentCols(const Tensor& z) { return z.cols(); }
std::size_t LatentCols(const Dual& z) { return z.value.cols(); }

}  // namespace

ConstantSigmaDecoder::ConstantSigmaDecoder(std::size_t latent_dim, std::size_t data_dim,
                                           double sigma)
    : latent_dim_(latent_dim), data_dim_(data_dim), sigma_(sigma) {
  if (!(sigma > 0.0)) throw ContractError("decoder sigma must be positive");
}

Tensor ConstantSigmaDecoder::Sigma(const Tensor& z) const {
  CheckLatent(z.cols(), latent_dim_);
  return Tensor(z.rows(), data_dim_, sigma_);
}

Dual ConstantSigmaDecoder::Sigma(const Dual& z) const {
  CheckLatent(z.value.cols(), latent_dim_);
  return Constant(Tensor(z.value.rows(), data_dim_, sigma_), z.directions());
}

AffineDecoder::AffineDecoder(Tensor weight, Tensor bias, double sigma)
    : ConstantSigmaDecoder(weight.rows(), weight.cols(), sigma),
      weight_(std::move(weight)),
      bias_(std::move(bias)) {
  if (bias_.rows() != 1 || bias_.cols() != weight_.cols()) {
    throw DimensionError("affine decoder bias " + bias_.ShapeString() + " does not match weight " +
                         weight_.ShapeString());
  }
}

std::shared_ptr<AffineDecoder> AffineDecoder::Identity(std::size_t d) {
  return std::make_shared<AffineDecoder>(Tensor::Identity(d), Tensor(1, d, 0.0));
}

Tensor AffineDecoder::Mean(const Tensor& z) const {
  CheckLatent(z.cols(), latent_dim());
  return Add(MatMul(z, weight_), bias_);
}

Dual AffineDecoder::Mean(const Dual& z) const {
  CheckLatent(z.value.cols(), latent_dim());
  return Add(MatMul(z, weight_), bias_);
}

ParaboloidDecoder::ParaboloidDecoder(double a, std::size_t d, double sigma)
    : ConstantSigmaDecoder(d, d + 1, sigma), a_(a) {}

template <typename V>
V ParaboloidDecoder::Run(const V& z) const {
  CheckLatent(LatentCols(z), latent_dim());
  return ConcatCols(std::vector<V>{z, Scale(SumCols(Square(z)), a_)});
}

Tensor ParaboloidDecoder::Mean(const Tensor& z) const { return Run(z); }
Dual ParaboloidDecoder::Mean(const Dual& z) const { return Run(z); }

BlobDecoder::BlobDecoder(std::size_t side, double width, double offset, double scale,
                         double sigma)
    : ConstantSigmaDecoder(2, side * side, sigma),
      side_(side),
      width_(width),
      offset_(offset),
      scale_(scale) {
  if (side == 0 || !(width > 0.0)) throw ContractError("blob decoder needs side > 0, width > 0");
  std::vector<double> px(side * side), py(side * side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      px[r * side + c] = static_cast<double>(c);
      py[r * side + c] = static_cast<double>(r);
    }
  }
  px_ = Tensor(1, side * side, std::move(px));
  py_ = Tensor(1, side * side, std::move(py));
}

template <typename V>
V BlobDecoder::Run(const V& z) const {
  CheckLatent(LatentCols(z), 2);
  V cx = AddScalar(Scale(SliceCols(z, 0, 1), scale_), offset_);
  V cy = AddScalar(Scale(SliceCols(z, 1, 2), scale_), offset_);
  V dist2 = Add(Square(Sub(cx, px_)), Square(Sub(cy, py_)));
  return Exp(Scale(dist2, -0.5 / (width_ * width_)));
}

Tensor BlobDecoder::Mean(const Tensor& z) const { return Run(z); }
Dual BlobDecoder::Mean(const Dual& z) const { return Run(z); }

ScaledDecoder::ScaledDecoder(std::shared_ptr<const Decoder> base, double scale, double offset)
    : base_(std::move(base)), scale_(scale), offset_(offset) {}

Tensor ScaledDecoder::Mean(const Tensor& z) const {
  return AddScalar(Scale(base_->Mean(z), scale_), offset_);
}
Dual ScaledDecoder::Mean(const Dual& z) const {
  return AddScalar(Scale(base_->Mean(z), scale_), offset_);
}
Tensor ScaledDecoder::Sigma(const Tensor& z) const {
  return Scale(base_->Sigma(z), std::abs(scale_));
}
Dual ScaledDecoder::Sigma(const Dual& z) const { return Scale(base_->Sigma(z), std::abs(scale_)); }

}  // namespace mprs
