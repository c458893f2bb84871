#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hr/coils.hpp"
#include "hr/fitting.hpp"
#include "hr/grog.hpp"
#include "hr/losses.hpp"
#include "hr/metrics.hpp"
#include "hr/nufft.hpp"
#include "hr/phantom.hpp"
#include "hr/ssdu.hpp"
#include "hr/subspace.hpp"
#include "hr/trajectories.hpp"

namespace py = pybind11;
using namespace hr;

namespace {

RArray to_rarray(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(a.shape(i));
  RArray out(shape);
  std::memcpy(out.data(), a.data(), sizeof(double) * static_cast<size_t>(out.numel()));
  return out;
}

CArray to_carray(const py::array_t<cplx, py::array::c_style | py::array::forcecast>& a) {
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(a.shape(i));
  CArray out(shape);
  std::memcpy(out.data(), a.data(), sizeof(cplx) * static_cast<size_t>(out.numel()));
  return out;
}

py::array_t<double> from_rarray(const RArray& a) {
  py::array_t<double> out(a.shape());
  std::memcpy(out.mutable_data(), a.data(), sizeof(double) * static_cast<size_t>(a.numel()));
  return out;
}

py::array_t<cplx> from_carray(const CArray& a) {
  py::array_t<cplx> out(a.shape());
  std::memcpy(out.mutable_data(), a.data(), sizeof(cplx) * static_cast<size_t>(a.numel()));
  return out;
}

py::dict traj_dict(const Trajectory& t) {
  py::dict d;
  Shape s{t.readout_count, t.samples_per_readout};
  RArray kx(s), ky(s);
  std::copy(t.kx.begin(), t.kx.end(), kx.data());
  std::copy(t.ky.begin(), t.ky.end(), ky.data());
  d["kx"] = from_rarray(kx);
  d["ky"] = from_rarray(ky);
  py::list frames;
  for (int64_t r = 0; r < t.readout_count; ++r) frames.append(t.frame_of(r));
  d["frame_index"] = frames;
  return d;
}

Trajectory traj_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
                     const py::array_t<double, py::array::c_style | py::array::forcecast>& ky) {
  if (kx.ndim() != 2 || ky.ndim() != 2) throw std::invalid_argument("kx/ky must be [R, S]");
  Trajectory t;
  t.kind = TrajKind::generic;
  t.readout_count = kx.shape(0);
  t.samples_per_readout = kx.shape(1);
  t.kx.assign(kx.data(), kx.data() + t.sample_count());
  t.ky.assign(ky.data(), ky.data() + t.sample_count());
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hybrid-recon core operators: trajectories, NUFFT, GROG, subspace, fitting";

  m.def(
      "gen_spiral",
      [](int64_t interleaves, int64_t samples, int matrix) {
        return traj_dict(gen_spiral(interleaves, samples, matrix));
      },
      py::arg("interleaves"), py::arg("samples_per_readout"), py::arg("matrix_size"));

  m.def(
      "gen_golden_radial",
      [](int64_t spokes, int64_t reps, int64_t samples, int64_t spf) {
        return traj_dict(gen_golden_radial(spokes, reps, samples, spf));
      },
      py::arg("spokes_per_repetition"), py::arg("repetitions"), py::arg("samples_per_spoke"),
      py::arg("spokes_per_frame") = 0);

  m.def(
      "density_compensation",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ky, int matrix,
         const std::string& kind) {
        Trajectory t = traj_from(kx, ky);
        t.kind = kind == "spiral" ? TrajKind::spiral : kind == "radial" ? TrajKind::radial
                                                                        : TrajKind::generic;
        return from_rarray(density_compensation(t, matrix));
      },
      py::arg("kx"), py::arg("ky"), py::arg("matrix_size"), py::arg("kind"));

  m.def(
      "nufft_forward",
      [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& image,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ky) {
        Trajectory t = traj_from(kx, ky);
        CArray img = to_carray(image);
        GriddingPlan plan(t, static_cast<int>(img.dim(0)));
        return from_carray(plan.forward(img));
      },
      py::arg("image"), py::arg("kx"), py::arg("ky"));

  m.def(
      "nufft_adjoint",
      [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& samples,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ky, int matrix,
         py::object weights) {
        Trajectory t = traj_from(kx, ky);
        GriddingPlan plan(t, matrix);
        CArray s = to_carray(samples.cast<py::array_t<cplx, py::array::c_style | py::array::forcecast>>());
        if (weights.is_none()) return from_carray(plan.adjoint(s));
        RArray w = to_rarray(weights.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>());
        return from_carray(plan.adjoint(s, &w));
      },
      py::arg("samples"), py::arg("kx"), py::arg("ky"), py::arg("matrix_size"),
      py::arg("weights") = py::none());

  m.def(
      "dft_oracle",
      [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& image,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ky) {
        return from_carray(dft_oracle(to_carray(image), traj_from(kx, ky)));
      },
      py::arg("image"), py::arg("kx"), py::arg("ky"));

  m.def(
      "gen_coil_sensitivities",
      [](int64_t ncoils, int matrix, uint64_t seed) {
        return from_carray(gen_coil_sensitivities(ncoils, matrix, seed));
      },
      py::arg("ncoils"), py::arg("matrix_size"), py::arg("seed"));

  m.def(
      "coil_combine",
      [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& images,
         const py::array_t<cplx, py::array::c_style | py::array::forcecast>& maps) {
        return from_carray(coil_combine(to_carray(images), to_carray(maps)));
      },
      py::arg("images"), py::arg("maps"));

  m.def(
      "build_dictionary",
      [](const std::vector<double>& t1_grid, const std::vector<double>& times, double flip_deg,
         double tr_ms) {
        SignalDictionary d = build_dictionary(t1_grid, times, flip_deg, tr_ms);
        return from_rarray(d.atoms);
      },
      py::arg("t1_grid_ms"), py::arg("times_ms"), py::arg("flip_deg"), py::arg("tr_ms"));

  m.def(
      "extract_basis",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& atoms, int64_t k,
         const std::vector<double>& times) {
        SignalDictionary d;
        d.atoms = to_rarray(atoms);
        d.times = times;
        std::vector<double> grid(static_cast<size_t>(d.atoms.dim(1)));
        std::iota(grid.begin(), grid.end(), 1.0);
        d.t1_grid = grid;
        TemporalBasis b = extract_basis(d, k);
        return py::make_tuple(from_rarray(b.u), b.singular_values);
      },
      py::arg("atoms"), py::arg("k"), py::arg("times_ms") = std::vector<double>{});

  m.def(
      "signal_model",
      [](double a, double b, double t1_star, double t) {
        return signal_model({a, b, t1_star}, t);
      },
      py::arg("a"), py::arg("b"), py::arg("t1_star"), py::arg("t_ms"));

  m.def(
      "t1_from_params",
      [](double a, double b, double t1_star) { return t1_from_params({a, b, t1_star}); },
      py::arg("a"), py::arg("b"), py::arg("t1_star"));

  m.def(
      "look_locker_params",
      [](double t1, double flip, double tr, double m0) {
        ModelParams p = look_locker_params(t1, flip, tr, m0);
        return py::make_tuple(p.a, p.b, p.t1_star);
      },
      py::arg("t1_ms"), py::arg("flip_deg"), py::arg("tr_ms"), py::arg("m0") = 1.0);

  m.def(
      "lm_fit",
      [](const std::vector<double>& curve, const std::vector<double>& times) {
        LmFitResult r = lm_fit(curve, times);
        py::dict d;
        d["a"] = r.params.a;
        d["b"] = r.params.b;
        d["t1_star"] = r.params.t1_star;
        d["t1"] = t1_from_params(r.params);
        d["converged"] = r.converged;
        d["residual"] = r.residual;
        return d;
      },
      py::arg("curve"), py::arg("times_ms"));

  m.def(
      "split_readout",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& kx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ky, double ratio,
         uint64_t seed) {
        SplitPair sp = split_readout(traj_from(kx, ky), ratio, seed);
        return py::make_tuple(from_rarray(sp.mask_a), from_rarray(sp.mask_b));
      },
      py::arg("kx"), py::arg("ky"), py::arg("ratio"), py::arg("seed"));

  m.def(
      "ssim",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ref,
         double dynamic_range) { return diff::ssim_value(to_rarray(x), to_rarray(ref), dynamic_range); },
      py::arg("x"), py::arg("ref"), py::arg("dynamic_range"));

  m.def(
      "nmse",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ref) {
        return nmse(to_rarray(x), to_rarray(ref));
      },
      py::arg("x"), py::arg("ref"));

  m.def(
      "mixed_l1_l2_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
        return diff::mixed_l1_l2_value(to_rarray(pred), to_rarray(target));
      },
      py::arg("pred"), py::arg("target"));

  m.def(
      "lung_phantom",
      [](int matrix, uint64_t seed) { return from_carray(gen_static_phantom(lung_phantom_spec(matrix, seed))); },
      py::arg("matrix_size"), py::arg("seed"));

  m.def(
      "brain_ir_series",
      [](int matrix, uint64_t seed, const std::vector<double>& times, double flip, double tr) {
        IrSeries s = gen_ir_series(brain_phantom_spec(matrix, seed), times, flip, tr);
        return py::make_tuple(from_carray(s.frames), from_rarray(s.t1_map), from_rarray(s.interior));
      },
      py::arg("matrix_size"), py::arg("seed"), py::arg("times_ms"), py::arg("flip_deg") = 5.0,
      py::arg("tr_ms") = 8.0);

  m.attr("golden_angle_deg") = kGoldenAngleDeg;
}
