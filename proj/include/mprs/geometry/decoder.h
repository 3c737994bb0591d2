#ifndef MPRS_GEOMETRY_DECODER_H_
#define MPRS_GEOMETRY_DECODER_H_

#include <cstddef>
#include <memory>

#include "mprs/diffcore/dual.h"
#include "mprs/diffcore/tensor.h"

namespace mprs {

// A stochastic decoder z -> N(mu(z), diag sigma(z)^2), evaluated row-wise on
// a batch of latents (B x d -> B x M). The Dual overloads must agree with the
// Tensor ones and are what the geometry code differentiates.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual std::size_t latent_dim() const = 0;
  virtual std::size_t data_dim() const = 0;
  virtual Tensor Mean(const Tensor& z) const = 0;
  virtual Dual Mean(const Dual& z) const = 0;
  virtual Tensor Sigma(const Tensor& z) const = 0;
  virtual Dual Sigma(const Dual& z) const = 0;
};

// Fixtures with a constant sigma, so the metric comes from mu alone.
class ConstantSigmaDecoder : public Decoder {
 public:
  ConstantSigmaDecoder(std::size_t latent_dim, std::size_t data_dim, double sigma);
  std::size_t latent_dim() const override { return latent_dim_; }
  std::size_t data_dim() const override { return data_dim_; }
  Tensor Sigma(const Tensor& z) const override;
  Dual Sigma(const Dual& z) const override;

 private:
  std::size_t latent_dim_;
  std::size_t data_dim_;
  double sigma_;
};

// mu(z) = z W + b with W d x M.
class AffineDecoder : public ConstantSigmaDecoder {
 public:
  AffineDecoder(Tensor weight, Tensor bias, double sigma = 1.0);
  static std::shared_ptr<AffineDecoder> Identity(std::size_t d);
  Tensor Mean(const Tensor& z) const override;
  Dual Mean(const Dual& z) const override;
  const Tensor& weight() const { return weight_; }

 private:
  Tensor weight_;
  Tensor bias_;
};

// mu(z) = (z_1, ..., z_d, a |z|^2).
class ParaboloidDecoder : public ConstantSigmaDecoder {
 public:
  explicit ParaboloidDecoder(double a, std::size_t d = 2, double sigma = 1.0);
  Tensor Mean(const Tensor& z) const override;
  Dual Mean(const Dual& z) const override;
  double a() const { return a_; }

 private:
  template <typename V>
  V Run(const V& z) const;
  double a_;
};

// A Gaussian blob rendered on a side x side pixel grid. The blob center is
// offset + scale * (z_1, z_2); pixel values lie in (0, 1].
class BlobDecoder : public ConstantSigmaDecoder {
 public:
  BlobDecoder(std::size_t side, double width, double offset, double scale, double sigma = 1.0);
  Tensor Mean(const Tensor& z) const override;
  Dual Mean(const Dual& z) const override;
  std::size_t side() const { return side_; }

 private:
  template <typename V>
  V Run(const V& z) const;
  std::size_t side_;
  double width_;
  double offset_;
  double scale_;
  Tensor px_;  // 1 x M pixel x coordinates
  Tensor py_;
};

// offset + scale * base(z); sigma is scaled the same way.
class ScaledDecoder : public Decoder {
 public:
  ScaledDecoder(std::shared_ptr<const Decoder> base, double scale, double offset);
  std::size_t latent_dim() const override { return base_->latent_dim(); }
  std::size_t data_dim() const override { return base_->data_dim(); }
  Tensor Mean(const Tensor& z) const override;
  Dual Mean(const Dual& z) const override;
  Tensor Sigma(const Tensor& z) const override;
  Dual Sigma(const Dual& z) const override;

 private:
  std::shared_ptr<const Decoder> base_;
  double scale_;
  double offset_;
};

}  // namespace mprs

#endif  // MPRS_GEOMETRY_DECODER_H_
