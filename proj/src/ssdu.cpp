#include "hr/ssdu.hpp"

#include <random>

#include "hr/fft.hpp"
#include "hr/losses.hpp"

namespace hr {

SplitPair split_readout(const Trajectory& traj, double ratio, uint64_t seed, SplitPattern pattern) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_readout: ratio must be in (0, 1)");
  if (traj.samples_per_readout < 2)
    throw std::invalid_argument("split_readout: need at least 2 samples per readout");
  const int64_t r = traj.readout_count, s = traj.samples_per_readout;
  SplitPair out;
  out.ratio = ratio;
  out.mask_a = RArray({r, s});
  out.mask_b = RArray({r, s});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int64_t stride = std::max<int64_t>(2, static_cast<int64_t>(std::lround(1.0 / (1.0 - ratio))));
  for (int64_t i = 0; i < r; ++i) {
    int64_t count_a = 0;
    for (int64_t j = 0; j < s; ++j) {
      bool to_a;
      if (pattern == SplitPattern::bernoulli) {
        to_a = u(rng) < ratio;
      } else {
        to_a = (j % stride) != 0;
      }
      out.mask_a.at(i, j) = to_a ? 1.0 : 0.0;
      count_a += to_a;
    }
    if (count_a == 0) {
      std::uniform_int_distribution<int64_t> pick(0, s - 1);
      out.mask_a.at(i, pick(rng)) = 1.0;
      ++count_a;
    } else if (count_a == s) {
      std::uniform_int_distribution<int64_t> pick(0, s - 1);
      out.mask_a.at(i, pick(rng)) = 0.0;
      --count_a;
    }
    for (int64_t j = 0; j < s; ++j) out.mask_b.at(i, j) = 1.0 - out.mask_a.at(i, j);
  }
  return out;
}

double sample_ratio(diff::Rng& rng) {
  std::uniform_real_distribution<double> u(0.3, 0.99);
  return u(rng);
}

RArray subset_dcf(const Trajectory& traj, const RArray& dcf, const RArray& mask, int bins) {
  check_same_shape("subset_dcf", dcf.shape(), mask.shape());
  if (traj.sample_count() != dcf.numel())
    throw std::invalid_argument("subset_dcf: trajectory does not match the weights");
  std::vector<double> full(static_cast<size_t>(bins), 0.0), kept(static_cast<size_t>(bins), 0.0);
  auto bin_of = [&](int64_t i) {
    const double r = std::hypot(traj.kx[static_cast<size_t>(i)], traj.ky[static_cast<size_t>(i)]);
    return std::min<int64_t>(bins - 1, static_cast<int64_t>(r / 0.5 * bins));
  };
  for (int64_t i = 0; i < dcf.numel(); ++i) {
    const int64_t b = bin_of(i);
    full[static_cast<size_t>(b)] += dcf[i];
    kept[static_cast<size_t>(b)] += dcf[i] * mask[i];
  }
  RArray out = dcf;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const int64_t b = bin_of(i);
    const double scale = kept[static_cast<size_t>(b)] > 0 ? full[static_cast<size_t>(b)] / kept[static_cast<size_t>(b)] : 0.0;
    out[i] *= mask[i] * scale;
  }
  return out;
}

diff::Graph::Id ssdu_loss_spiral(diff::Graph& g, const NetworkFn& net,
                                 std::shared_ptr<const CoilwiseEncoder> enc, const CArray& kspace,
                                 const Trajectory& traj, const RArray& dcf, const SplitPair& split) {
  const int64_t ncoils = kspace.dim(0);
  RArray wa = subset_dcf(traj, dcf, split.mask_a);
  RArray wb = subset_dcf(traj, dcf, split.mask_b);
  CArray x0a = coilwise_adjoint(*enc, kspace, wa);
  CArray tgt = coilwise_adjoint(*enc, kspace, wb);

  diff::Graph::Id x0 = g.constant(complex_to_channels(x0a));
  diff::Graph::Id recon = net(g, x0);
  auto normal_b = make_coilwise_normal_map(enc, std::move(wb), ncoils);
  diff::Graph::Id pred = g.apply_linear(normal_b, recon);
  diff::Graph::Id target = g.constant(complex_to_channels(tgt));
  return diff::mixed_l1_l2_loss(g, pred, target);
}

CArray subspace_adjoint_image(const CArray& ysub) {
  if (ysub.ndim() != 4) throw std::invalid_argument("subspace_adjoint_image: need [K, C, M, M]");
  const int64_t k = ysub.dim(0), nc = ysub.dim(1), m = ysub.dim(2);
  const int64_t npix = m * m;
  CArray out({k * nc, m, m});
  CArray plane({m, m});
  for (int64_t kc = 0; kc < k * nc; ++kc) {
    for (int64_t i = 0; i < npix; ++i) plane[i] = ysub[kc * npix + i];
    CArray img = ifft2_centered(plane);
    for (int64_t i = 0; i < npix; ++i) out[kc * npix + i] = img[i];
  }
  return out;
}

diff::Graph::Id ssdu_loss_subspace(diff::Graph& g, const NetworkFn& net, const CArray& ysub_a,
                                   const CArray& ysub_b,
                                   std::shared_ptr<const SubspaceDcOperator> mk_b) {
  check_same_shape("ssdu_loss_subspace", ysub_a.shape(), ysub_b.shape());
  const int64_t ncoils = ysub_a.dim(1);
  diff::Graph::Id x0 = g.constant(complex_to_channels(subspace_adjoint_image(ysub_a)));
  diff::Graph::Id recon = net(g, x0);
  auto normal_b = make_subspace_normal_map(mk_b, ncoils);
  diff::Graph::Id pred = g.apply_linear(normal_b, recon);
  diff::Graph::Id target = g.constant(complex_to_channels(subspace_adjoint_image(ysub_b)));
  return diff::mixed_l1_l2_loss(g, pred, target);
}

}  // namespace hr
