#include "hr/operators.hpp"

namespace hr {

namespace {
Shape real_encoded(const Shape& complex_shape) {
  Shape s = complex_shape;
  s[0] *= 2;
  return s;
}
}  // namespace

ComplexLinearMap::ComplexLinearMap(std::string name, Shape complex_in, Shape complex_out, Fn fwd, Fn adj)
    : name_(std::move(name)),
      in_(real_encoded(complex_in)),
      out_(real_encoded(complex_out)),
      fwd_(std::move(fwd)),
      adj_(std::move(adj)) {}

Tensor ComplexLinearMap::apply(const Tensor& x) const {
  return complex_to_channels(fwd_(channels_to_complex(x)));
}

Tensor ComplexLinearMap::apply_adjoint(const Tensor& y) const {
  return complex_to_channels(adj_(channels_to_complex(y)));
}

CArray coilwise_adjoint(const CoilwiseEncoder& enc, const CArray& kspace, const RArray& weights) {
  if (kspace.ndim() != 3 || kspace.dim(1) != enc.readout_count() ||
      kspace.dim(2) != enc.samples_per_readout())
    throw std::invalid_argument("coilwise_adjoint: kspace " + shape_str(kspace.shape()) +
                                " does not match the encoder");
  const int64_t ncoils = kspace.dim(0);
  const int64_t m = enc.matrix();
  const int64_t nsamp = enc.readout_count() * enc.samples_per_readout();
  const int64_t npix = m * m;
  CArray out({ncoils, m, m});
  CArray s({enc.readout_count(), enc.samples_per_readout()});
  for (int64_t c = 0; c < ncoils; ++c) {
    for (int64_t j = 0; j < nsamp; ++j) s[j] = kspace[c * nsamp + j];
    CArray img = enc.adjoint(s, weights);
    for (int64_t i = 0; i < npix; ++i) out[c * npix + i] = img[i];
  }
  return out;
}

std::shared_ptr<const ComplexLinearMap> make_coilwise_normal_map(
    std::shared_ptr<const CoilwiseEncoder> enc, RArray weights, int64_t ncoils) {
  const int64_t m = enc->matrix();
  auto w = std::make_shared<const RArray>(std::move(weights));
  auto normal = [enc, w, ncoils, m](const CArray& x) {
    if (x.dim(0) != ncoils)
      throw std::invalid_argument("coilwise_normal: expected " + std::to_string(ncoils) + " coils, got " +
                                  shape_str(x.shape()));
    CArray out({ncoils, m, m});
    CArray img({m, m});
    const int64_t npix = m * m;
    for (int64_t c = 0; c < ncoils; ++c) {
      for (int64_t i = 0; i < npix; ++i) img[i] = x[c * npix + i];
      CArray samp = enc->forward(img);
      CArray back = enc->adjoint(samp, *w);
      for (int64_t i = 0; i < npix; ++i) out[c * npix + i] = back[i];
    }
    return out;
  };
  return std::make_shared<const ComplexLinearMap>("coilwise_normal", Shape{ncoils, m, m},
                                                  Shape{ncoils, m, m}, normal, normal);
}

std::shared_ptr<const ComplexLinearMap> make_encode_map(std::shared_ptr<const GriddingPlan> plan,
                                                        CArray coils, RArray weights) {
  const int64_t ncoils = coils.dim(0);
  const int64_t m = plan->matrix();
  const int64_t r = plan->readout_count(), s = plan->samples_per_readout();
  auto c = std::make_shared<const CArray>(std::move(coils));
  auto w = std::make_shared<const RArray>(std::move(weights));
  auto fwd = [plan, c, w](const CArray& x) {
    return encode(x.reshaped({x.dim(1), x.dim(2)}), *c, *plan, *w);
  };
  auto adj = [plan, c, w, m](const CArray& y) {
    return encode_adjoint(y, *c, *plan, *w).reshaped({1, m, m});
  };
  return std::make_shared<const ComplexLinearMap>("encode", Shape{1, m, m}, Shape{ncoils, r, s}, fwd, adj);
}

}  // namespace hr
