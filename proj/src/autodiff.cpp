#include "hr/autodiff.hpp"

#include <cmath>

namespace hr::diff {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_scalar(const char* op, const Tensor& t) {
  if (t.numel() != 1)
    throw std::invalid_argument(std::string(op) + ": expected scalar, got " + shape_str(t.shape()));
}

}  // namespace

Graph::Id Graph::push(Tensor value, std::vector<Id> inputs, std::function<void(Graph&, const Tensor&)> back) {
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  for (Id i : n.inputs)
    if (nodes_[i].requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::input(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tensor& Graph::grad_slot(Id id) {
  if (grads_[id].empty()) grads_[id] = Tensor(nodes_[id].value.shape());
  return grads_[id];
}

void Graph::accum(Id id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& slot = grad_slot(id);
  for (int64_t i = 0; i < g.numel(); ++i) slot[i] += g[i];
}

void Graph::backward(Id loss) {
  check_scalar("backward", nodes_[loss].value);
  grads_.assign(nodes_.size(), Tensor());
  grad_slot(loss)[0] = 1.0;
  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.back || grads_[id].empty()) continue;
    n.back(*this, grads_[id]);
  }
}

const Tensor& Graph::grad(Id id) const {
  if (static_cast<size_t>(id) < grads_.size() && !grads_[id].empty()) return grads_[id];
  zero_cache_ = Tensor(nodes_[id].value.shape());
  return zero_cache_;
}

Graph::Id Graph::add(Id a, Id b) {
  check_same_shape("add", shape(a), shape(b));
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
  return push(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    g.accum(a, go);
    g.accum(b, go);
  });
}

Graph::Id Graph::sub(Id a, Id b) {
  check_same_shape("sub", shape(a), shape(b));
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
  return push(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    g.accum(a, go);
    Tensor gn = go;
    for (int64_t i = 0; i < gn.numel(); ++i) gn[i] = -gn[i];
    g.accum(b, gn);
  });
}

Graph::Id Graph::mul(Id a, Id b) {
  check_same_shape("mul", shape(a), shape(b));
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
  return push(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    Tensor ga = go, gb = go;
    const Tensor& va = g.value(a);
    const Tensor& vb2 = g.value(b);
    for (int64_t i = 0; i < go.numel(); ++i) {
      ga[i] *= vb2[i];
      gb[i] *= va[i];
    }
    g.accum(a, ga);
    g.accum(b, gb);
  });
}

Graph::Id Graph::div(Id a, Id b) {
  check_same_shape("div", shape(a), shape(b));
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] /= vb[i];
  return push(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
    const Tensor& va = g.value(a);
    const Tensor& vb2 = g.value(b);
    Tensor ga = go, gb = go;
    for (int64_t i = 0; i < go.numel(); ++i) {
      ga[i] /= vb2[i];
      gb[i] *= -va[i] / (vb2[i] * vb2[i]);
    }
    g.accum(a, ga);
    g.accum(b, gb);
  });
}

Graph::Id Graph::scale(Id a, double s) {
  Tensor out = value(a);
  for (double& v : out.vec()) v *= s;
  return push(std::move(out), {a}, [a, s](Graph& g, const Tensor& go) {
    Tensor ga = go;
    for (double& v : ga.vec()) v *= s;
    g.accum(a, ga);
  });
}

Graph::Id Graph::add_scalar(Id a, double s) {
  Tensor out = value(a);
  for (double& v : out.vec()) v += s;
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) { g.accum(a, go); });
}

Graph::Id Graph::square(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v *= v;
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    Tensor ga = go;
    const Tensor& va = g.value(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] *= 2.0 * va[i];
    g.accum(a, ga);
  });
}

Graph::Id Graph::sqrt(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v = std::sqrt(v);
  Id self = push(std::move(out), {a}, nullptr);
  if (nodes_[self].requires_grad) {
    nodes_[self].back = [a, self](Graph& g, const Tensor& go) {
      Tensor ga = go;
      const Tensor& vo = g.value(self);
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] *= 0.5 / vo[i];
      g.accum(a, ga);
    };
  }
  return self;
}

Graph::Id Graph::abs(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v = std::abs(v);
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    Tensor ga = go;
    const Tensor& va = g.value(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] *= (va[i] > 0) - (va[i] < 0);
    g.accum(a, ga);
  });
}

Graph::Id Graph::exp(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v = std::exp(v);
  Id self = push(std::move(out), {a}, nullptr);
  if (nodes_[self].requires_grad) {
    nodes_[self].back = [a, self](Graph& g, const Tensor& go) {
      Tensor ga = go;
      const Tensor& vo = g.value(self);
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] *= vo[i];
      g.accum(a, ga);
    };
  }
  return self;
}

Graph::Id Graph::silu(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v *= sigmoid(v);
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    Tensor ga = go;
    const Tensor& va = g.value(a);
    for (int64_t i = 0; i < ga.numel(); ++i) {
      double s = sigmoid(va[i]);
      ga[i] *= s * (1.0 + va[i] * (1.0 - s));
    }
    g.accum(a, ga);
  });
}

Graph::Id Graph::softplus(Id a) {
  Tensor out = value(a);
  for (double& v : out.vec()) v = v > 30.0 ? v : std::log1p(std::exp(v));
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    Tensor ga = go;
    const Tensor& va = g.value(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] *= sigmoid(va[i]);
    g.accum(a, ga);
  });
}

Graph::Id Graph::sum(Id a) {
  double s = 0;
  for (double v : value(a).vec()) s += v;
  return push(Tensor::scalar(s), {a}, [a](Graph& g, const Tensor& go) {
    Tensor ga(g.shape(a), go[0]);
    g.accum(a, ga);
  });
}

Graph::Id Graph::mean(Id a) {
  return scale(sum(a), 1.0 / static_cast<double>(value(a).numel()));
}

Graph::Id Graph::reshape(Id a, Shape s) {
  Tensor out = value(a).reshaped(s);
  return push(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
    g.accum(a, go.reshaped(g.shape(a)));
  });
}

Graph::Id Graph::select(Id a, int64_t index) {
  const Tensor& va = value(a);
  if (va.ndim() < 2 || index < 0 || index >= va.dim(0))
    throw std::invalid_argument("select: index " + std::to_string(index) + " out of range for " +
                                shape_str(va.shape()));
  Shape s(va.shape().begin() + 1, va.shape().end());
  const int64_t inner = va.numel() / va.dim(0);
  Tensor out(s);
  for (int64_t i = 0; i < inner; ++i) out[i] = va[index * inner + i];
  return push(std::move(out), {a}, [a, index, inner](Graph& g, const Tensor& go) {
    Tensor ga(g.shape(a));
    for (int64_t i = 0; i < inner; ++i) ga[index * inner + i] = go[i];
    g.accum(a, ga);
  });
}

Graph::Id Graph::scale_by(Id scalar, Id x) {
  check_scalar("scale_by", value(scalar));
  const double s = value(scalar)[0];
  Tensor out = value(x);
  for (double& v : out.vec()) v *= s;
  return push(std::move(out), {scalar, x}, [scalar, x, s](Graph& g, const Tensor& go) {
    double gs = 0;
    const Tensor& vx = g.value(x);
    for (int64_t i = 0; i < go.numel(); ++i) gs += go[i] * vx[i];
    g.accum(scalar, Tensor::scalar(gs));
    Tensor gx = go;
    for (double& v : gx.vec()) v *= s;
    g.accum(x, gx);
  });
}

Graph::Id Graph::affine(Id x, Id w, Id b) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(b);
  if (vx.ndim() != 2 || vw.ndim() != 2 || vb.ndim() != 1 || vx.dim(1) != vw.dim(1) || vw.dim(0) != vb.dim(0))
    throw std::invalid_argument("affine: incompatible shapes x" + shape_str(vx.shape()) + " w" +
                                shape_str(vw.shape()) + " b" + shape_str(vb.shape()));
  const int64_t batch = vx.dim(0), n = vx.dim(1), m = vw.dim(0);
  Tensor out({batch, m});
  for (int64_t r = 0; r < batch; ++r)
    for (int64_t o = 0; o < m; ++o) {
      double acc = vb[o];
      for (int64_t i = 0; i < n; ++i) acc += vw.at(o, i) * vx.at(r, i);
      out.at(r, o) = acc;
    }
  return push(std::move(out), {x, w, b}, [x, w, b, batch, n, m](Graph& g, const Tensor& go) {
    const Tensor& vx2 = g.value(x);
    const Tensor& vw2 = g.value(w);
    Tensor gx({batch, n}), gw({m, n}), gb({m});
    for (int64_t r = 0; r < batch; ++r)
      for (int64_t o = 0; o < m; ++o) {
        const double gv = go.at(r, o);
        gb[o] += gv;
        for (int64_t i = 0; i < n; ++i) {
          gx.at(r, i) += gv * vw2.at(o, i);
          gw.at(o, i) += gv * vx2.at(r, i);
        }
      }
    g.accum(x, gx);
    g.accum(w, gw);
    g.accum(b, gb);
  });
}

Graph::Id Graph::conv2d(Id x, Id w, Id b, bool same_padding) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(b);
  if (vx.ndim() != 3 || vw.ndim() != 4 || vb.ndim() != 1 || vw.dim(1) != vx.dim(0) || vw.dim(0) != vb.dim(0))
    throw std::invalid_argument("conv2d: incompatible shapes x" + shape_str(vx.shape()) + " w" +
                                shape_str(vw.shape()) + " b" + shape_str(vb.shape()));
  const int64_t cin = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
  const int64_t cout = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
  const int64_t ph = same_padding ? kh / 2 : 0, pw = same_padding ? kw / 2 : 0;
  const int64_t oh = h + 2 * ph - kh + 1, ow = wd + 2 * pw - kw + 1;
  if (oh <= 0 || ow <= 0)
    throw std::invalid_argument("conv2d: input " + shape_str(vx.shape()) + " smaller than kernel " +
                                shape_str(vw.shape()));
  Tensor out({cout, oh, ow});
  {
    const double* px = vx.data();
    const double* pw_ = vw.data();
    double* po = out.data();
    for (int64_t o = 0; o < cout; ++o)
      for (int64_t y = 0; y < oh; ++y) {
        double* orow = po + (o * oh + y) * ow;
        for (int64_t xx = 0; xx < ow; ++xx) orow[xx] = vb[o];
        for (int64_t c = 0; c < cin; ++c)
          for (int64_t i = 0; i < kh; ++i) {
            const int64_t yy = y + i - ph;
            if (yy < 0 || yy >= h) continue;
            const double* xrow = px + (c * h + yy) * wd;
            const double* wrow = pw_ + ((o * cin + c) * kh + i) * kw;
            for (int64_t j = 0; j < kw; ++j) {
              const double wv = wrow[j];
              const int64_t lo = std::max<int64_t>(0, pw - j);
              const int64_t hi = std::min(ow, wd + pw - j);
              const double* xs = xrow + lo + j - pw;
              for (int64_t xx = lo; xx < hi; ++xx) orow[xx] += wv * xs[xx - lo];
            }
          }
      }
  }
  return push(std::move(out), {x, w, b},
              [x, w, b, cin, h, wd, cout, kh, kw, ph, pw, oh, ow](Graph& g, const Tensor& go) {
                const Tensor& vx2 = g.value(x);
                const Tensor& vw2 = g.value(w);
                Tensor gx({cin, h, wd}), gw({cout, cin, kh, kw}), gb({cout});
                const double* px = vx2.data();
                const double* pw_ = vw2.data();
                const double* pg = go.data();
                for (int64_t o = 0; o < cout; ++o) {
                  for (int64_t y = 0; y < oh; ++y) {
                    const double* grow = pg + (o * oh + y) * ow;
                    for (int64_t xx = 0; xx < ow; ++xx) gb[o] += grow[xx];
                    for (int64_t c = 0; c < cin; ++c)
                      for (int64_t i = 0; i < kh; ++i) {
                        const int64_t yy = y + i - ph;
                        if (yy < 0 || yy >= h) continue;
                        const double* xrow = px + (c * h + yy) * wd;
                        double* gxrow = gx.data() + (c * h + yy) * wd;
                        const double* wrow = pw_ + ((o * cin + c) * kh + i) * kw;
                        double* gwrow = gw.data() + ((o * cin + c) * kh + i) * kw;
                        for (int64_t j = 0; j < kw; ++j) {
                          const double wv = wrow[j];
                          double gwacc = 0;
                          const int64_t lo = std::max<int64_t>(0, pw - j);
                          const int64_t hi = std::min(ow, wd + pw - j);
                          const int64_t off = j - pw;
                          for (int64_t xx = lo; xx < hi; ++xx) {
                            gxrow[xx + off] += grow[xx] * wv;
                            gwacc += grow[xx] * xrow[xx + off];
                          }
                          gwrow[j] += gwacc;
                        }
                      }
                  }
                }
                g.accum(x, gx);
                g.accum(w, gw);
                g.accum(b, gb);
              });
}

Graph::Id Graph::complex_abs(Id x) {
  const Tensor& vx = value(x);
  if (vx.ndim() < 1 || vx.dim(0) % 2 != 0)
    throw std::invalid_argument("complex_abs: leading axis must pair re/im channels, got " +
                                shape_str(vx.shape()));
  Shape s = vx.shape();
  const int64_t pairs = s[0] / 2;
  const int64_t inner = vx.numel() / s[0];
  s[0] = pairs;
  Tensor out(s);
  for (int64_t c = 0; c < pairs; ++c)
    for (int64_t i = 0; i < inner; ++i) {
      double re = vx[(2 * c) * inner + i], im = vx[(2 * c + 1) * inner + i];
      out[c * inner + i] = std::hypot(re, im);
    }
  Id self = push(std::move(out), {x}, nullptr);
  if (nodes_[self].requires_grad) {
    nodes_[self].back = [x, self, pairs, inner](Graph& g, const Tensor& go) {
      const Tensor& vx2 = g.value(x);
      const Tensor& vo = g.value(self);
      Tensor gx(vx2.shape());
      for (int64_t c = 0; c < pairs; ++c)
        for (int64_t i = 0; i < inner; ++i) {
          const double m = vo[c * inner + i];
          if (m <= 0) continue;
          const double gv = go[c * inner + i] / m;
          gx[(2 * c) * inner + i] = gv * vx2[(2 * c) * inner + i];
          gx[(2 * c + 1) * inner + i] = gv * vx2[(2 * c + 1) * inner + i];
        }
      g.accum(x, gx);
    };
  }
  return self;
}

Graph::Id Graph::apply_linear(std::shared_ptr<const LinearMap> op, Id x) {
  if (shape(x) != op->in_shape())
    throw std::invalid_argument(op->name() + ": input shape " + shape_str(shape(x)) +
                                " does not match operator domain " + shape_str(op->in_shape()));
  Tensor out = op->apply(value(x));
  if (out.shape() != op->out_shape())
    throw std::invalid_argument(op->name() + ": operator returned " + shape_str(out.shape()) +
                                ", declared " + shape_str(op->out_shape()));
  return push(std::move(out), {x}, [op, x](Graph& g, const Tensor& go) {
    g.accum(x, op->apply_adjoint(go));
  });
}

Graph::Id Graph::ir_signal(Id params, std::vector<double> times_ms, double t1_scale_ms) {
  const Tensor& vp = value(params);
  if (vp.ndim() != 2 || vp.dim(1) != 3)
    throw std::invalid_argument("ir_signal: params must be [B,3], got " + shape_str(vp.shape()));
  const int64_t batch = vp.dim(0);
  const int64_t nt = static_cast<int64_t>(times_ms.size());
  Tensor out({batch, nt});
  for (int64_t r = 0; r < batch; ++r) {
    const double a = vp.at(r, 0), bb = vp.at(r, 1), tau = vp.at(r, 2) * t1_scale_ms;
    for (int64_t t = 0; t < nt; ++t) out.at(r, t) = a - bb * std::exp(-times_ms[t] / tau);
  }
  auto times = std::make_shared<std::vector<double>>(std::move(times_ms));
  return push(std::move(out), {params}, [params, times, t1_scale_ms, batch, nt](Graph& g, const Tensor& go) {
    const Tensor& vp2 = g.value(params);
    Tensor gp({batch, 3});
    for (int64_t r = 0; r < batch; ++r) {
      const double bb = vp2.at(r, 1), tau = vp2.at(r, 2) * t1_scale_ms;
      for (int64_t t = 0; t < nt; ++t) {
        const double tm = (*times)[t];
        const double e = std::exp(-tm / tau);
        const double gv = go.at(r, t);
        gp.at(r, 0) += gv;
        gp.at(r, 1) += gv * (-e);
        gp.at(r, 2) += gv * (-bb * e * tm / (tau * tau)) * t1_scale_ms;
      }
    }
    g.accum(params, gp);
  });
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h) {
  Tensor g(x.shape());
  Tensor xp = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace hr::diff
