#include "hr/unrolled.hpp"

#include <cmath>

namespace hr {

UnrolledNetwork UnrolledNetwork::init(const Config& cfg) {
  if (cfg.num_blocks < 1) throw std::invalid_argument("UnrolledNetwork: need at least one block");
  if (cfg.channels < 2 || cfg.channels % 2 != 0)
    throw std::invalid_argument("UnrolledNetwork: channels must be an even 2-channel count");
  UnrolledNetwork net;
  net.cfg_ = cfg;
  diff::Rng rng(cfg.seed);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    Block blk;
    blk.mu = Tensor::scalar(cfg.mu_init);
    diff::CnnBlock::Config cc;
    cc.channels = cfg.channels;
    cc.hidden = cfg.hidden;
    blk.cnn = diff::CnnBlock::init(cc, rng);
    if (cfg.zero_cnn) {
      std::vector<diff::ParamRef> refs;
      blk.cnn.collect(refs, "z");
      for (auto& r : refs)
        for (double& v : r.tensor->vec()) v = 0.0;
    }
    net.blocks_.push_back(std::move(blk));
  }
  return net;
}

diff::Graph::Id unrolled_block_step(diff::GraphParams& gp, diff::Graph::Id x_i, diff::Graph::Id x0,
                                    UnrolledNetwork& net, int index,
                                    std::shared_ptr<const diff::LinearMap> normal_op) {
  diff::Graph& g = gp.graph();
  UnrolledNetwork::Block& blk = net.blocks_[static_cast<size_t>(index)];
  const std::string prefix = "block" + std::to_string(index);
  diff::Graph::Id mu = gp.bind(prefix + ".mu", blk.mu);
  diff::Graph::Id dc = g.sub(g.apply_linear(normal_op, x_i), x0);
  diff::Graph::Id reg = blk.cnn.forward(gp, x_i, prefix + ".cnn");
  return g.sub(g.sub(x_i, g.scale_by(mu, dc)), reg);
}

diff::Graph::Id UnrolledNetwork::forward(diff::GraphParams& gp, diff::Graph::Id x0,
                                         std::shared_ptr<const diff::LinearMap> normal_op) const {
  diff::Graph::Id x = x0;
  auto& self = const_cast<UnrolledNetwork&>(*this);
  for (int b = 0; b < num_blocks(); ++b) x = unrolled_block_step(gp, x, x0, self, b, normal_op);
  return x;
}

std::vector<diff::ParamRef> UnrolledNetwork::parameters() {
  std::vector<diff::ParamRef> refs;
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    refs.push_back({prefix + ".mu", &blocks_[b].mu});
    blocks_[b].cnn.collect(refs, prefix + ".cnn");
  }
  return refs;
}

UnrolledNetwork make_spiral_network(int64_t ncoils, int num_blocks, uint64_t seed, int64_t hidden,
                                    bool zero_cnn) {
  UnrolledNetwork::Config cfg;
  cfg.channels = 2 * ncoils;
  cfg.num_blocks = num_blocks;
  cfg.hidden = hidden;
  cfg.zero_cnn = zero_cnn;
  cfg.seed = seed;
  return UnrolledNetwork::init(cfg);
}

UnrolledNetwork make_subspace_network(int64_t ncoils, int64_t k, int num_blocks, uint64_t seed,
                                      int64_t hidden, bool zero_cnn) {
  UnrolledNetwork::Config cfg;
  cfg.channels = 2 * ncoils * k;
  cfg.num_blocks = num_blocks;
  cfg.hidden = hidden;
  cfg.zero_cnn = zero_cnn;
  cfg.seed = seed;
  return UnrolledNetwork::init(cfg);
}

double normal_operator_norm(const diff::LinearMap& op, uint64_t seed, int iterations) {
  diff::Rng rng(seed);
  Tensor v = diff::randn(op.in_shape(), rng, 1.0);
  double norm = 0;
  for (int it = 0; it < iterations; ++it) {
    double n = norm2(v);
    if (n == 0) break;
    for (double& x : v.vec()) x /= n;
    v = op.apply(v);
    norm = norm2(v);
  }
  return norm;
}

}  // namespace hr
