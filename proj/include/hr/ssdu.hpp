#pragma once

#include <functional>

#include "hr/nn.hpp"
#include "hr/operators.hpp"
#include "hr/subspace.hpp"
#include "hr/trajectories.hpp"

namespace hr {

/// Disjoint exhaustive per-sample masks over acquired k-space, one pair per
/// split. Both sets keep at least one sample per readout.
struct SplitPair {
  RArray mask_a, mask_b;  // [R, S] in {0,1}, mask_a + mask_b == 1
  double ratio = 0;
};

enum class SplitPattern { bernoulli, strided };

/// Assign each sample within a readout to Set A with probability `ratio`
/// (independent seeded Bernoulli), else Set B; one random sample is
/// reassigned per readout if a set would come up empty. The strided pattern
/// deals every n-th sample to B instead.
SplitPair split_readout(const Trajectory& traj, double ratio, uint64_t seed,
                        SplitPattern pattern = SplitPattern::bernoulli);

/// Per-(dataset, epoch) split ratio, uniform on [0.3, 0.99].
double sample_ratio(diff::Rng& rng);

/// Network body: multi-coil image in, same shape out (2-channel encoding).
using NetworkFn = std::function<diff::Graph::Id(diff::Graph&, diff::Graph::Id)>;

/// Stage-1 self-supervised loss for spiral data: the Set-A adjoint image is
/// reconstructed by the network, re-projected through the Set-B normal
/// operator, and compared against the Set-B adjoint image with the mixed
/// L1-L2 loss. Fully differentiable through the network.
diff::Graph::Id ssdu_loss_spiral(diff::Graph& g, const NetworkFn& net,
                                 std::shared_ptr<const CoilwiseEncoder> enc, const CArray& kspace,
                                 const Trajectory& traj, const RArray& dcf, const SplitPair& split);

/// Density compensation of a thinned sample set: the full-trajectory
/// weights restricted to the set, rescaled annulus by annulus so every
/// radial bin's weight sum matches the full trajectory's. This keeps the
/// adjoint's low-frequency gain split-independent.
RArray subset_dcf(const Trajectory& traj, const RArray& dcf, const RArray& mask, int bins = 16);

/// Same structure entirely within the subspace (per-component Cartesian FFT
/// paths): inputs are the separately gridded and compressed Set-A/Set-B
/// subspace k-spaces U^T W_A y_A and U^T W_B y_B, and the precomputed Set-B
/// operator M_k.
diff::Graph::Id ssdu_loss_subspace(diff::Graph& g, const NetworkFn& net, const CArray& ysub_a,
                                   const CArray& ysub_b,
                                   std::shared_ptr<const SubspaceDcOperator> mk_b);

/// Multi-coil subspace image F^H y_sub (componentwise centered inverse FFT),
/// complex [K*C, M, M] from [K, C, M, M].
CArray subspace_adjoint_image(const CArray& ysub);

}  // namespace hr
