#include "hr/container.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace hr {

namespace {

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts unsupported");

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

void write_header(std::ostream& os, const char* dtype, const Shape& shape) {
  os << "HRC1 " << dtype << " " << shape.size();
  for (int64_t d : shape) os << " " << d;
  os << "\n";
}

Shape read_header(std::istream& is, std::string& dtype) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("container: missing header");
  std::istringstream ss(line);
  std::string magic;
  size_t ndims = 0;
  ss >> magic >> dtype >> ndims;
  if (magic != "HRC1" || ss.fail()) throw std::runtime_error("container: bad header '" + line + "'");
  Shape shape(ndims);
  for (size_t i = 0; i < ndims; ++i) {
    ss >> shape[i];
    if (ss.fail() || shape[i] <= 0) throw std::runtime_error("container: bad dims in '" + line + "'");
  }
  return shape;
}

void save_f64_stream(std::ostream& os, const RArray& a) {
  write_header(os, "f64", a.shape());
  os.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.numel()));
}

RArray load_real_stream(std::istream& is) {
  std::string dtype;
  Shape shape = read_header(is, dtype);
  RArray a(shape);
  if (dtype == "f64") {
    is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.numel()));
  } else if (dtype == "f32") {
    std::vector<float> buf(static_cast<size_t>(a.numel()));
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(sizeof(float) * a.numel()));
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = buf[static_cast<size_t>(i)];
  } else {
    throw std::runtime_error("container: expected real dtype, got " + dtype);
  }
  if (!is) throw std::runtime_error("container: truncated payload");
  return a;
}

}  // namespace

void save_f64(const std::string& path, const RArray& a) {
  auto f = open_out(path);
  save_f64_stream(f, a);
}

void save_f32(const std::string& path, const RArray& a) {
  auto f = open_out(path);
  write_header(f, "f32", a.shape());
  std::vector<float> buf(static_cast<size_t>(a.numel()));
  for (int64_t i = 0; i < a.numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(a[i]);
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(sizeof(float) * a.numel()));
}

void save_c64(const std::string& path, const CArray& a) {
  auto f = open_out(path);
  write_header(f, "c64", a.shape());
  std::vector<float> buf(static_cast<size_t>(2 * a.numel()));
  for (int64_t i = 0; i < a.numel(); ++i) {
    buf[static_cast<size_t>(2 * i)] = static_cast<float>(a[i].real());
    buf[static_cast<size_t>(2 * i + 1)] = static_cast<float>(a[i].imag());
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(sizeof(float) * buf.size()));
}

RArray load_real(const std::string& path) {
  auto f = open_in(path);
  return load_real_stream(f);
}

CArray load_complex(const std::string& path) {
  auto f = open_in(path);
  std::string dtype;
  Shape shape = read_header(f, dtype);
  if (dtype != "c64") throw std::runtime_error("container: expected c64, got " + dtype);
  CArray a(shape);
  std::vector<float> buf(static_cast<size_t>(2 * a.numel()));
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(sizeof(float) * buf.size()));
  if (!f) throw std::runtime_error("container: truncated payload");
  for (int64_t i = 0; i < a.numel(); ++i)
    a[i] = cplx(buf[static_cast<size_t>(2 * i)], buf[static_cast<size_t>(2 * i + 1)]);
  return a;
}

void save_checkpoint(const std::string& path, const std::vector<diff::ParamRef>& params,
                     const diff::AdamState& adam) {
  auto f = open_out(path);
  size_t entries = params.size() + 5;
  for (const auto& p : params)
    if (adam.slots.count(p.name)) entries += 2;
  f << "HRCKPT1 " << entries << "\n";
  auto put = [&](const std::string& name, const RArray& a) {
    f << name << "\n";
    save_f64_stream(f, a);
  };
  for (const auto& p : params) {
    put(p.name, *p.tensor);
    auto it = adam.slots.find(p.name);
    if (it != adam.slots.end()) {
      put(p.name + ".adam_m", it->second.m);
      put(p.name + ".adam_v", it->second.v);
    }
  }
  put("__step", Tensor::scalar(static_cast<double>(adam.step)));
  put("__lr", Tensor::scalar(adam.cfg.lr));
  put("__beta1", Tensor::scalar(adam.cfg.beta1));
  put("__beta2", Tensor::scalar(adam.cfg.beta2));
  put("__eps", Tensor::scalar(adam.cfg.eps));
}

void load_checkpoint(const std::string& path, const std::vector<diff::ParamRef>& params,
                     diff::AdamState* adam) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("HRCKPT1 ", 0) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const size_t entries = static_cast<size_t>(std::stoll(line.substr(8)));
  std::map<std::string, RArray> loaded;
  for (size_t i = 0; i < entries; ++i) {
    std::string name;
    if (!std::getline(f, name)) throw std::runtime_error("checkpoint: truncated entry list");
    loaded.emplace(name, load_real_stream(f));
  }
  for (const auto& p : params) {
    auto it = loaded.find(p.name);
    if (it == loaded.end()) throw std::runtime_error("checkpoint: missing parameter '" + p.name + "'");
    check_same_shape("load_checkpoint", p.tensor->shape(), it->second.shape());
    *p.tensor = it->second;
  }
  if (adam) {
    adam->slots.clear();
    adam->step = static_cast<int64_t>(loaded.at("__step")[0]);
    adam->cfg.lr = loaded.at("__lr")[0];
    adam->cfg.beta1 = loaded.at("__beta1")[0];
    adam->cfg.beta2 = loaded.at("__beta2")[0];
    adam->cfg.eps = loaded.at("__eps")[0];
    for (const auto& p : params) {
      auto m = loaded.find(p.name + ".adam_m");
      auto v = loaded.find(p.name + ".adam_v");
      if (m != loaded.end() && v != loaded.end()) {
        adam->slots[p.name] = {m->second, v->second};
      }
    }
  }
}

void save_pgm(const std::string& path, const RArray& img, double lo, double hi, int bits) {
  if (img.ndim() != 2) throw std::invalid_argument("save_pgm: image must be 2D");
  if (!(hi > lo)) throw std::invalid_argument("save_pgm: window must satisfy hi > lo");
  if (bits != 8 && bits != 16) throw std::invalid_argument("save_pgm: bits must be 8 or 16");
  auto f = open_out(path);
  const int maxval = bits == 8 ? 255 : 65535;
  f << "P5\n" << img.dim(1) << " " << img.dim(0) << "\n" << maxval << "\n";
  for (int64_t i = 0; i < img.numel(); ++i) {
    double v = (img[i] - lo) / (hi - lo);
    v = std::min(1.0, std::max(0.0, v));
    const uint32_t q = static_cast<uint32_t>(std::lround(v * maxval));
    if (bits == 8) {
      const uint8_t b = static_cast<uint8_t>(q);
      f.write(reinterpret_cast<const char*>(&b), 1);
    } else {
      const uint8_t hi8 = static_cast<uint8_t>(q >> 8), lo8 = static_cast<uint8_t>(q & 0xff);
      f.write(reinterpret_cast<const char*>(&hi8), 1);  // PGM 16-bit is big-endian
      f.write(reinterpret_cast<const char*>(&lo8), 1);
    }
  }
}

}  // namespace hr
