#pragma once

#include <functional>
#include <memory>

#include "hr/autodiff.hpp"
#include "hr/nufft.hpp"

namespace hr {

/// Adapts a C-linear operator pair (forward, adjoint) on complex arrays to a
/// diff::LinearMap on the real 2-channel encoding. The real transpose of the
/// encoding of a C-linear map is the encoding of its Hermitian adjoint, so
/// autodiff backward through this node applies exactly the declared adjoint.
class ComplexLinearMap final : public diff::LinearMap {
 public:
  using Fn = std::function<CArray(const CArray&)>;

  ComplexLinearMap(std::string name, Shape complex_in, Shape complex_out, Fn fwd, Fn adj);

  Shape in_shape() const override { return in_; }
  Shape out_shape() const override { return out_; }
  Tensor apply(const Tensor& x) const override;
  Tensor apply_adjoint(const Tensor& y) const override;
  std::string name() const override { return name_; }

  CArray apply_complex(const CArray& x) const { return fwd_(x); }
  CArray apply_adjoint_complex(const CArray& y) const { return adj_(y); }

 private:
  std::string name_;
  Shape in_, out_;  // real-encoded shapes ([2C, ...])
  Fn fwd_, adj_;
};

/// Single-image non-Cartesian transform family used coil-by-coil: forward
/// maps [M, M] to samples [R, S]; adjoint applies per-sample weights. The
/// production implementation wraps a GriddingPlan; tests substitute an
/// exact-DFT encoder behind the same interface.
class CoilwiseEncoder {
 public:
  virtual ~CoilwiseEncoder() = default;
  virtual int matrix() const = 0;
  virtual int64_t readout_count() const = 0;
  virtual int64_t samples_per_readout() const = 0;
  virtual CArray forward(const CArray& image) const = 0;
  virtual CArray adjoint(const CArray& samples, const RArray& weights) const = 0;
};

class NufftEncoder final : public CoilwiseEncoder {
 public:
  explicit NufftEncoder(std::shared_ptr<const GriddingPlan> plan) : plan_(std::move(plan)) {}
  int matrix() const override { return plan_->matrix(); }
  int64_t readout_count() const override { return plan_->readout_count(); }
  int64_t samples_per_readout() const override { return plan_->samples_per_readout(); }
  CArray forward(const CArray& image) const override { return plan_->forward(image); }
  CArray adjoint(const CArray& samples, const RArray& weights) const override {
    return plan_->adjoint(samples, &weights);
  }

 private:
  std::shared_ptr<const GriddingPlan> plan_;
};

/// Normal operator N = F^H W F applied independently to every coil of a
/// multi-coil image ([2C, M, M] real encoding). Self-adjoint for real
/// nonnegative W, which is what makes the unrolled DC term symmetric.
std::shared_ptr<const ComplexLinearMap> make_coilwise_normal_map(
    std::shared_ptr<const CoilwiseEncoder> enc, RArray weights, int64_t ncoils);

/// Multi-coil weighted adjoint x0 = F^H W y per coil (plain data, no graph).
CArray coilwise_adjoint(const CoilwiseEncoder& enc, const CArray& kspace, const RArray& weights);

/// Full encoder E = sqrt(W) F C mapping a single image [2, M, M] to
/// multi-coil samples encoded as [2*C, R, S].
std::shared_ptr<const ComplexLinearMap> make_encode_map(std::shared_ptr<const GriddingPlan> plan,
                                                        CArray coils, RArray weights);

}  // namespace hr
