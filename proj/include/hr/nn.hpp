#pragma once

#include <map>
#include <random>
#include <utility>

#include "hr/autodiff.hpp"

namespace hr::diff {

using Rng = std::mt19937_64;

Tensor randn(Shape shape, Rng& rng, double stddev);

/// Named views of a model's parameter tensors, used for binding into a
/// graph, optimizer updates, and checkpoints.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

/// Per-graph binding of parameters as differentiable inputs. One binding is
/// created for each forward/backward pass; grads are read back by name.
class GraphParams {
 public:
  explicit GraphParams(Graph& g) : g_(&g) {}

  Graph& graph() const { return *g_; }

  Graph::Id bind(const std::string& name, Tensor& t) {
    Graph::Id id = g_->input(t, true);
    bound_.push_back({name, &t});
    ids_.push_back(id);
    return id;
  }

  size_t size() const { return bound_.size(); }
  const std::string& name(size_t i) const { return bound_[i].name; }
  Tensor& tensor(size_t i) const { return *bound_[i].tensor; }
  Graph::Id id(size_t i) const { return ids_[i]; }
  const Tensor& grad(size_t i) const { return g_->grad(ids_[i]); }

 private:
  Graph* g_;
  std::vector<ParamRef> bound_;
  std::vector<Graph::Id> ids_;
};

/// Fixed stack of same-padding 2D convolutions with SiLU nonlinearities;
/// the last layer is linear and the output is used as a learned residual.
/// Spatial shape is preserved.
class CnnBlock {
 public:
  struct Config {
    int64_t channels = 0;  // input == output channel count
    int64_t hidden = 16;
    int layers = 3;
    int64_t ksize = 3;
  };

  CnnBlock() = default;
  static CnnBlock init(const Config& cfg, Rng& rng);

  Graph::Id forward(GraphParams& gp, Graph::Id x, const std::string& prefix) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
  int64_t weight_count() const;
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  struct Layer {
    Tensor weight;  // [out, in, k, k]
    Tensor bias;    // [out]
  };
  mutable std::vector<Layer> layers_;
};

/// Fully connected network for curve fitting: input dim = time points,
/// output dim = 3, SiLU between layers.
class Mlp {
 public:
  Mlp() = default;
  static Mlp init(const std::vector<int64_t>& dims, Rng& rng);

  Graph::Id forward(GraphParams& gp, Graph::Id x, const std::string& prefix) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
  int64_t input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.dim(1); }
  int64_t output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.dim(0); }

 private:
  struct Layer {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]
  };
  mutable std::vector<Layer> layers_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter first/second moment accumulators keyed by parameter name,
/// so the update is independent of registration order.
struct AdamState {
  AdamConfig cfg;
  struct Slot {
    Tensor m, v;
  };
  std::map<std::string, Slot> slots;
  int64_t step = 0;
};

struct AdamUpdate {
  std::string name;
  Tensor* param;
  const Tensor* grad;
};

/// One bias-corrected ADAM step over all listed parameters. Throws on NaN
/// gradients, naming the offending parameter.
void adam_step(AdamState& state, const std::vector<AdamUpdate>& updates);

}  // namespace hr::diff
