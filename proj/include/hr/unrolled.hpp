#pragma once

#include "hr/nn.hpp"
#include "hr/operators.hpp"

namespace hr {

/// Cascade of unrolled gradient-descent blocks with learnable step sizes and
/// per-block CNN regularizer increments:
///   x_{i+1} = x_i - mu_i (N x_i - x0) - CNN(x_i)
/// where N is the bound normal operator (F^H W F per coil for the spiral
/// context, F^H M_k F per coil within the subspace). Forward output shape
/// equals the input shape.
class UnrolledNetwork {
 public:
  struct Config {
    int64_t channels = 0;  // real 2-channel count: 2C (spiral) or 2KC (subspace)
    int num_blocks = 6;
    int64_t hidden = 16;
    double mu_init = 0.5;
    bool zero_cnn = false;  // pure gradient-descent cascade
    uint64_t seed = 1;
  };

  static UnrolledNetwork init(const Config& cfg);

  diff::Graph::Id forward(diff::GraphParams& gp, diff::Graph::Id x0,
                          std::shared_ptr<const diff::LinearMap> normal_op) const;

  std::vector<diff::ParamRef> parameters();
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const Config& config() const { return cfg_; }

 private:
  friend diff::Graph::Id unrolled_block_step(diff::GraphParams&, diff::Graph::Id, diff::Graph::Id,
                                             UnrolledNetwork&, int,
                                             std::shared_ptr<const diff::LinearMap>);
  Config cfg_;
  struct Block {
    mutable Tensor mu;  // [1]
    diff::CnnBlock cnn;
  };
  std::vector<Block> blocks_;
};

/// One unrolled iteration using the network's block `index`; exposed so the
/// spiral/subspace block updates can be tested in isolation.
diff::Graph::Id unrolled_block_step(diff::GraphParams& gp, diff::Graph::Id x_i, diff::Graph::Id x0,
                                    UnrolledNetwork& net, int index,
                                    std::shared_ptr<const diff::LinearMap> normal_op);

/// Spiral context (Eq.-3-style blocks): multi-coil channels.
UnrolledNetwork make_spiral_network(int64_t ncoils, int num_blocks, uint64_t seed,
                                    int64_t hidden = 16, bool zero_cnn = false);
/// Subspace context (Eq.-8-style blocks): K components x coils folded.
UnrolledNetwork make_subspace_network(int64_t ncoils, int64_t k, int num_blocks, uint64_t seed,
                                      int64_t hidden = 16, bool zero_cnn = false);

/// Largest eigenvalue of the normal operator by power iteration, for the
/// mu < 2/L gradient-descent convergence bound.
double normal_operator_norm(const diff::LinearMap& op, uint64_t seed = 1, int iterations = 30);

}  // namespace hr
