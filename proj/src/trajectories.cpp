#include "hr/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hr {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int32_t Trajectory::frame_count() const {
  if (frame_index.empty()) return readout_count > 0 ? 1 : 0;
  int32_t mx = 0;
  for (int32_t f : frame_index) mx = std::max(mx, f);
  return mx + 1;
}

Trajectory gen_spiral(int64_t interleaves, int64_t samples_per_readout, int matrix_size) {
  if (interleaves < 1) throw std::invalid_argument("gen_spiral: interleaves must be >= 1");
  if (samples_per_readout < 2) throw std::invalid_argument("gen_spiral: need >= 2 samples per readout");
  if (matrix_size < 2) throw std::invalid_argument("gen_spiral: matrix_size must be >= 2");
  Trajectory t;
  t.kind = TrajKind::spiral;
  t.readout_count = interleaves;
  t.samples_per_readout = samples_per_readout;
  t.matrix_hint = matrix_size;
  t.kx.resize(static_cast<size_t>(t.sample_count()));
  t.ky.resize(static_cast<size_t>(t.sample_count()));
  const double turns = static_cast<double>(matrix_size) / (2.0 * static_cast<double>(interleaves));
  for (int64_t i = 0; i < interleaves; ++i) {
    const double rot = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(interleaves);
    for (int64_t j = 0; j < samples_per_readout; ++j) {
      const double s = static_cast<double>(j) / static_cast<double>(samples_per_readout - 1);
      const double r = 0.5 * s;
      const double th = 2.0 * kPi * turns * s + rot;
      const size_t idx = static_cast<size_t>(i * samples_per_readout + j);
      t.kx[idx] = r * std::cos(th);
      t.ky[idx] = r * std::sin(th);
    }
  }
  return t;
}

Trajectory gen_golden_radial(int64_t spokes_per_repetition, int64_t repetitions,
                             int64_t samples_per_spoke, int64_t spokes_per_frame) {
  if (spokes_per_repetition < 1 || repetitions < 1)
    throw std::invalid_argument("gen_golden_radial: counts must be >= 1");
  if (samples_per_spoke < 2 || samples_per_spoke % 2 != 0)
    throw std::invalid_argument("gen_golden_radial: samples_per_spoke must be even and >= 2");
  if (spokes_per_frame < 0 || (spokes_per_frame > 0 && spokes_per_repetition % spokes_per_frame != 0))
    throw std::invalid_argument("gen_golden_radial: spokes_per_frame must divide spokes_per_repetition");
  Trajectory t;
  t.kind = TrajKind::radial;
  t.readout_count = spokes_per_repetition * repetitions;
  t.samples_per_readout = samples_per_spoke;
  t.kx.resize(static_cast<size_t>(t.sample_count()));
  t.ky.resize(static_cast<size_t>(t.sample_count()));
  t.frame_index.resize(static_cast<size_t>(t.readout_count), 0);
  const double ga = kGoldenAngleDeg * kPi / 180.0;
  for (int64_t n = 0; n < t.readout_count; ++n) {
    const double ang = static_cast<double>(n) * ga;
    const double cx = std::cos(ang), sy = std::sin(ang);
    for (int64_t j = 0; j < samples_per_spoke; ++j) {
      const double r = -0.5 + static_cast<double>(j) / static_cast<double>(samples_per_spoke);
      const size_t idx = static_cast<size_t>(n * samples_per_spoke + j);
      t.kx[idx] = r * cx;
      t.ky[idx] = r * sy;
    }
    if (spokes_per_frame > 0)
      t.frame_index[static_cast<size_t>(n)] = static_cast<int32_t>((n % spokes_per_repetition) / spokes_per_frame);
  }
  return t;
}

namespace {

// Per-axis sum over centered pixel coordinates, S(k) = sum_u e^{-2pi i k u},
// u in [-M/2, M/2). Used to normalize DCF to exact unit DC gain.
cplx dirichlet_sum(double k, int m) {
  cplx s = 0;
  for (int u = -m / 2; u < m - m / 2; ++u) s += std::polar(1.0, -2.0 * kPi * k * static_cast<double>(u));
  return s;
}

void analytic_weights_for_frame(const Trajectory& traj, const std::vector<int64_t>& readouts,
                                RArray& w) {
  const int64_t s = traj.samples_per_readout;
  const int64_t n_read = static_cast<int64_t>(readouts.size());
  if (traj.kind == TrajKind::radial) {
    const double dk = 1.0 / static_cast<double>(s);
    const double dtheta = kPi / static_cast<double>(n_read);
    const double floor_r = dk / 2.0;
    for (int64_t r : readouts)
      for (int64_t j = 0; j < s; ++j) {
        const size_t idx = static_cast<size_t>(r * s + j);
        const double radius = std::hypot(traj.kx[idx], traj.ky[idx]);
        w[static_cast<int64_t>(idx)] = std::max(radius, floor_r) * dtheta * dk;
      }
  } else if (traj.kind == TrajKind::spiral) {
    // uniform-in-s Archimedean spiral: area element per sample is
    // r * dr/ds * (2*pi/I) / (S-1), exactly, independent of turn count
    const double dr = 0.5 / static_cast<double>(s - 1);
    const double dphi = 2.0 * kPi / static_cast<double>(n_read);
    for (int64_t r : readouts)
      for (int64_t j = 0; j < s; ++j) {
        const size_t idx = static_cast<size_t>(r * s + j);
        const double radius = std::hypot(traj.kx[idx], traj.ky[idx]);
        const double floor_r = 0.25 * dr;  // shared k-space center sample
        w[static_cast<int64_t>(idx)] = std::max(radius, floor_r) * dr * dphi;
      }
  } else {
    throw std::invalid_argument("density_compensation: no analytic rule for generic trajectories");
  }
}

void voronoi_raster_weights(const Trajectory& traj, RArray& w) {
  // nearest-sample cell areas estimated on a fine raster over [-0.5, 0.5]^2
  const int grid = 384;
  const int64_t n = traj.sample_count();
  const int buckets = 48;
  std::vector<std::vector<int64_t>> bucket(static_cast<size_t>(buckets * buckets));
  auto bucket_of = [&](double kx, double ky) {
    int bx = std::min(buckets - 1, std::max(0, static_cast<int>((kx + 0.5) * buckets)));
    int by = std::min(buckets - 1, std::max(0, static_cast<int>((ky + 0.5) * buckets)));
    return by * buckets + bx;
  };
  for (int64_t i = 0; i < n; ++i)
    bucket[static_cast<size_t>(bucket_of(traj.kx[static_cast<size_t>(i)], traj.ky[static_cast<size_t>(i)]))]
        .push_back(i);
  const double cell_area = 1.0 / (static_cast<double>(grid) * grid);
  for (int gy = 0; gy < grid; ++gy)
    for (int gx = 0; gx < grid; ++gx) {
      const double kx = -0.5 + (gx + 0.5) / grid;
      const double ky = -0.5 + (gy + 0.5) / grid;
      if (kx * kx + ky * ky > 0.25) continue;  // weights cover the sampled disk only
      int64_t best = -1;
      double best_d = 1e30;
      const int bx = std::min(buckets - 1, std::max(0, static_cast<int>((kx + 0.5) * buckets)));
      const int by = std::min(buckets - 1, std::max(0, static_cast<int>((ky + 0.5) * buckets)));
      for (int ring = 0; ring < buckets && best < 0; ++ring) {
        for (int dy = -ring; dy <= ring; ++dy)
          for (int dx = -ring; dx <= ring; ++dx) {
            if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
            const int cx = bx + dx, cy = by + dy;
            if (cx < 0 || cy < 0 || cx >= buckets || cy >= buckets) continue;
            for (int64_t i : bucket[static_cast<size_t>(cy * buckets + cx)]) {
              const double d = std::hypot(traj.kx[static_cast<size_t>(i)] - kx,
                                          traj.ky[static_cast<size_t>(i)] - ky);
              if (d < best_d) {
                best_d = d;
                best = i;
              }
            }
          }
        // one extra ring after the first hit would be needed for exactness;
        // the bucket width (~21 raster cells) makes misses negligible here
      }
      if (best >= 0) w[best] += cell_area;
    }
}

}  // namespace

DensityCompensation density_compensation(const Trajectory& traj, int matrix_size, DcfMethod method) {
  if (traj.sample_count() <= 0) throw std::invalid_argument("density_compensation: empty trajectory");
  bool all_same = true;
  for (int64_t i = 1; i < traj.sample_count() && all_same; ++i)
    all_same = traj.kx[static_cast<size_t>(i)] == traj.kx[0] && traj.ky[static_cast<size_t>(i)] == traj.ky[0];
  if (all_same) throw std::invalid_argument("density_compensation: degenerate trajectory (all samples identical)");

  RArray w({traj.readout_count, traj.samples_per_readout});
  if (method == DcfMethod::voronoi_raster) {
    voronoi_raster_weights(traj, w);
  } else {
    std::map<int32_t, std::vector<int64_t>> frames;
    for (int64_t r = 0; r < traj.readout_count; ++r) frames[traj.frame_of(r)].push_back(r);
    for (const auto& [frame, readouts] : frames) analytic_weights_for_frame(traj, readouts, w);
  }

  const int m = matrix_size > 0 ? matrix_size : traj.matrix_hint;
  if (m > 0) {
    // unit DC gain: the adjoint image of samples of the constant image has
    // mean  (1/M^2) sum_j w_j |Sx(kx_j)|^2 |Sy(ky_j)|^2
    double gain = 0;
    for (int64_t i = 0; i < traj.sample_count(); ++i) {
      const double ax = std::norm(dirichlet_sum(traj.kx[static_cast<size_t>(i)], m));
      const double ay = std::norm(dirichlet_sum(traj.ky[static_cast<size_t>(i)], m));
      gain += w[i] * ax * ay;
    }
    gain /= static_cast<double>(m) * m;
    if (gain <= 0) throw std::runtime_error("density_compensation: degenerate DC gain");
    for (double& v : w.vec()) v /= gain;
  }
  return w;
}

namespace {
void check_keep(const std::vector<int64_t>& keep, int64_t count) {
  if (keep.empty()) throw std::invalid_argument("undersample: empty keep set");
  for (size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= count)
      throw std::invalid_argument("undersample: readout index out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw std::invalid_argument("undersample: keep set must be strictly increasing");
  }
}
}  // namespace

Trajectory undersample(const Trajectory& traj, const std::vector<int64_t>& keep) {
  check_keep(keep, traj.readout_count);
  Trajectory out;
  out.kind = traj.kind;
  out.readout_count = static_cast<int64_t>(keep.size());
  out.samples_per_readout = traj.samples_per_readout;
  out.matrix_hint = traj.matrix_hint;
  const int64_t s = traj.samples_per_readout;
  out.kx.reserve(keep.size() * static_cast<size_t>(s));
  out.ky.reserve(keep.size() * static_cast<size_t>(s));
  for (int64_t r : keep) {
    out.kx.insert(out.kx.end(), traj.kx.begin() + r * s, traj.kx.begin() + (r + 1) * s);
    out.ky.insert(out.ky.end(), traj.ky.begin() + r * s, traj.ky.begin() + (r + 1) * s);
    if (!traj.frame_index.empty()) out.frame_index.push_back(traj.frame_index[static_cast<size_t>(r)]);
  }
  return out;
}

CArray undersample(const CArray& data, const std::vector<int64_t>& keep) {
  if (data.ndim() < 2) throw std::invalid_argument("undersample: data must have [..., R, S] axes");
  const int64_t s = data.dim(data.ndim() - 1);
  const int64_t r_count = data.dim(data.ndim() - 2);
  check_keep(keep, r_count);
  const int64_t outer = data.numel() / (r_count * s);
  Shape out_shape = data.shape();
  out_shape[out_shape.size() - 2] = static_cast<int64_t>(keep.size());
  CArray out(out_shape);
  for (int64_t o = 0; o < outer; ++o)
    for (size_t ki = 0; ki < keep.size(); ++ki)
      for (int64_t j = 0; j < s; ++j)
        out[(o * static_cast<int64_t>(keep.size()) + static_cast<int64_t>(ki)) * s + j] =
            data[(o * r_count + keep[ki]) * s + j];
  return out;
}

RArray undersample(const RArray& per_readout, const std::vector<int64_t>& keep) {
  if (per_readout.ndim() != 2) throw std::invalid_argument("undersample: weights must be [R, S]");
  check_keep(keep, per_readout.dim(0));
  const int64_t s = per_readout.dim(1);
  RArray out({static_cast<int64_t>(keep.size()), s});
  for (size_t ki = 0; ki < keep.size(); ++ki)
    for (int64_t j = 0; j < s; ++j) out.at(static_cast<int64_t>(ki), j) = per_readout.at(keep[ki], j);
  return out;
}

std::vector<int64_t> keep_strided(int64_t readout_count, int64_t stride) {
  if (stride < 1) throw std::invalid_argument("keep_strided: stride must be >= 1");
  std::vector<int64_t> keep;
  for (int64_t r = 0; r < readout_count; r += stride) keep.push_back(r);
  return keep;
}

std::vector<int64_t> keep_first_repetitions(int64_t spokes_per_repetition, int64_t repetitions,
                                            int64_t keep_repetitions) {
  if (keep_repetitions < 1 || keep_repetitions > repetitions)
    throw std::invalid_argument("keep_first_repetitions: bad repetition count");
  std::vector<int64_t> keep(static_cast<size_t>(spokes_per_repetition * keep_repetitions));
  std::iota(keep.begin(), keep.end(), 0);
  return keep;
}

}  // namespace hr
