#include "hr/losses.hpp"

#include <cmath>

namespace hr::diff {

Graph::Id mixed_l1_l2_loss(Graph& g, Graph::Id pred, Graph::Id target) {
  check_same_shape("mixed_l1_l2_loss", g.shape(pred), g.shape(target));
  double t1 = 0, t2 = 0;
  for (double v : g.value(target).vec()) {
    t1 += std::abs(v);
    t2 += v * v;
  }
  if (t1 <= 0 || t2 <= 0) throw std::invalid_argument("mixed_l1_l2_loss: target has zero norm");
  Graph::Id d = g.sub(target, pred);
  Graph::Id l2 = g.sqrt(g.sum(g.square(d)));
  Graph::Id l1 = g.sum(g.abs(d));
  return g.add(g.scale(l2, 1.0 / std::sqrt(t2)), g.scale(l1, 1.0 / t1));
}

Tensor gaussian_window(int size, double sigma) {
  Tensor w({1, 1, size, size});
  const double c = (size - 1) / 2.0;
  double total = 0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      double v = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma));
      w.at(0, 0, i, j) = v;
      total += v;
    }
  for (double& v : w.vec()) v /= total;
  return w;
}

Graph::Id ssim(Graph& g, Graph::Id x, Graph::Id ref, double dynamic_range) {
  const Shape sx = g.shape(x);  // by value: pushing nodes may reallocate
  check_same_shape("ssim", sx, g.shape(ref));
  if (sx.size() != 2) throw std::invalid_argument("ssim: expected 2D images, got " + shape_str(sx));
  if (sx[0] < kSsimWindow || sx[1] < kSsimWindow)
    throw std::invalid_argument("ssim: image " + shape_str(sx) + " smaller than the 11x11 window");
  if (dynamic_range <= 0) throw std::invalid_argument("ssim: dynamic_range must be positive");

  Graph::Id w = g.constant(gaussian_window(kSsimWindow, kSsimSigma));
  Graph::Id b0 = g.constant(Tensor({1}));
  auto blur = [&](Graph::Id im) { return g.conv2d(im, w, b0, false); };

  Graph::Id a = g.reshape(x, {1, sx[0], sx[1]});
  Graph::Id r = g.reshape(ref, {1, sx[0], sx[1]});
  Graph::Id mu_a = blur(a);
  Graph::Id mu_r = blur(r);
  Graph::Id mu_aa = g.square(mu_a);
  Graph::Id mu_rr = g.square(mu_r);
  Graph::Id mu_ar = g.mul(mu_a, mu_r);
  Graph::Id var_a = g.sub(blur(g.square(a)), mu_aa);
  Graph::Id var_r = g.sub(blur(g.square(r)), mu_rr);
  Graph::Id cov = g.sub(blur(g.mul(a, r)), mu_ar);

  const double c1 = (kSsimK1 * dynamic_range) * (kSsimK1 * dynamic_range);
  const double c2 = (kSsimK2 * dynamic_range) * (kSsimK2 * dynamic_range);
  Graph::Id num = g.mul(g.add_scalar(g.scale(mu_ar, 2.0), c1), g.add_scalar(g.scale(cov, 2.0), c2));
  Graph::Id den = g.mul(g.add_scalar(g.add(mu_aa, mu_rr), c1), g.add_scalar(g.add(var_a, var_r), c2));
  return g.mean(g.div(num, den));
}

double mixed_l1_l2_value(const Tensor& pred, const Tensor& target) {
  Graph g;
  return g.value(mixed_l1_l2_loss(g, g.constant(pred), g.constant(target)))[0];
}

double ssim_value(const Tensor& x, const Tensor& ref, double dynamic_range) {
  Graph g;
  return g.value(ssim(g, g.constant(x), g.constant(ref), dynamic_range))[0];
}

}  // namespace hr::diff
