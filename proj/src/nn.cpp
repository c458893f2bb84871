#include "hr/nn.hpp"

#include <cmath>

namespace hr::diff {

Tensor randn(Shape shape, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = dist(rng);
  return t;
}

CnnBlock CnnBlock::init(const Config& cfg, Rng& rng) {
  if (cfg.channels <= 0 || cfg.layers < 1) throw std::invalid_argument("CnnBlock: bad config");
  CnnBlock blk;
  blk.cfg_ = cfg;
  for (int l = 0; l < cfg.layers; ++l) {
    const int64_t cin = l == 0 ? cfg.channels : cfg.hidden;
    const int64_t cout = l == cfg.layers - 1 ? cfg.channels : cfg.hidden;
    const double fan = static_cast<double>(cin * cfg.ksize * cfg.ksize);
    // last layer starts near zero so the untrained block is close to a
    // plain gradient-descent iteration
    const double scale = (l == cfg.layers - 1 ? 0.01 : 1.0) / std::sqrt(fan);
    Layer layer;
    layer.weight = randn({cout, cin, cfg.ksize, cfg.ksize}, rng, scale);
    layer.bias = Tensor({cout});
    blk.layers_.push_back(std::move(layer));
  }
  return blk;
}

Graph::Id CnnBlock::forward(GraphParams& gp, Graph::Id x, const std::string& prefix) const {
  Graph& g = gp.graph();
  Graph::Id h = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Graph::Id w = gp.bind(prefix + ".conv" + std::to_string(l) + ".w", layers_[l].weight);
    Graph::Id b = gp.bind(prefix + ".conv" + std::to_string(l) + ".b", layers_[l].bias);
    h = g.conv2d(h, w, b, true);
    if (l + 1 < layers_.size()) h = g.silu(h);
  }
  return h;
}

void CnnBlock::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  for (size_t l = 0; l < layers_.size(); ++l) {
    out.push_back({prefix + ".conv" + std::to_string(l) + ".w", &layers_[l].weight});
    out.push_back({prefix + ".conv" + std::to_string(l) + ".b", &layers_[l].bias});
  }
}

int64_t CnnBlock::weight_count() const {
  int64_t n = 0;
  for (const Layer& l : layers_) n += l.weight.numel() + l.bias.numel();
  return n;
}

Mlp Mlp::init(const std::vector<int64_t>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  Mlp mlp;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.weight = randn({dims[l + 1], dims[l]}, rng, 1.0 / std::sqrt(static_cast<double>(dims[l])));
    layer.bias = Tensor({dims[l + 1]});
    mlp.layers_.push_back(std::move(layer));
  }
  return mlp;
}

Graph::Id Mlp::forward(GraphParams& gp, Graph::Id x, const std::string& prefix) const {
  Graph& g = gp.graph();
  Graph::Id h = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Graph::Id w = gp.bind(prefix + ".fc" + std::to_string(l) + ".w", layers_[l].weight);
    Graph::Id b = gp.bind(prefix + ".fc" + std::to_string(l) + ".b", layers_[l].bias);
    h = g.affine(h, w, b);
    if (l + 1 < layers_.size()) h = g.silu(h);
  }
  return h;
}

void Mlp::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  for (size_t l = 0; l < layers_.size(); ++l) {
    out.push_back({prefix + ".fc" + std::to_string(l) + ".w", &layers_[l].weight});
    out.push_back({prefix + ".fc" + std::to_string(l) + ".b", &layers_[l].bias});
  }
}

void adam_step(AdamState& state, const std::vector<AdamUpdate>& updates) {
  state.step += 1;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (const AdamUpdate& u : updates) {
    check_same_shape("adam_step", u.param->shape(), u.grad->shape());
    for (double g : u.grad->vec())
      if (std::isnan(g)) throw std::runtime_error("adam_step: NaN gradient for parameter '" + u.name + "'");
    AdamState::Slot& slot = state.slots[u.name];
    if (slot.m.empty()) {
      slot.m = Tensor(u.param->shape());
      slot.v = Tensor(u.param->shape());
    }
    check_same_shape("adam_step state", slot.m.shape(), u.param->shape());
    for (int64_t i = 0; i < u.param->numel(); ++i) {
      const double g = (*u.grad)[i];
      slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * g;
      slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      (*u.param)[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace hr::diff
