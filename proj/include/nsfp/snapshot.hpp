#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "nsfp/grid.hpp"
#include "nsfp/ns_solver.hpp"
#include "nsfp/qspace.hpp"

namespace nsfp {

// Raw binary state dump. Layout (little endian):
//   bytes 0..3   magic "NSFP"
//   u32 version (=1), u32 mode (0 macro, 1 micro, 2 coupled)
//   u32 nx, u32 ny, u32 nq
//   f64 time, u64 step
// then f64 payload:
//   macro:   u1 (nx+1)*ny, u2 nx*(ny+1), p nx*ny, s11, s12, s22, rho
//   micro:   (nq+1)^2 coefficient fields of nx*ny, mode-major
//   coupled: u1, u2, p, then the coefficient fields
inline constexpr std::uint32_t snapshot_version = 1;

struct Snapshot {
  std::uint32_t mode = 0;
  std::uint32_t nx = 0, ny = 0, nq = 0;
  double time = 0.0;
  std::uint64_t step = 0;
  std::vector<double> u1, u2, p;
  std::vector<double> s11, s12, s22, rho;
  std::vector<std::vector<double>> modes;
};

namespace detail {

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

inline void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  std::fwrite(b, 1, 4, f);
}

inline void put_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  std::fwrite(b, 1, 8, f);
}

inline void put_f64(std::FILE* f, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(f, u);
}

inline void put_f64s(std::FILE* f, const std::vector<double>& v) {
  for (double x : v) put_f64(f, x);
}

template <class Err>
inline std::uint32_t get_u32(std::FILE* f, const char* what) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw Err(std::string("snapshot truncated: ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (std::uint32_t)b[i] << (8 * i);
  return v;
}

template <class Err>
inline std::uint64_t get_u64(std::FILE* f, const char* what) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) throw Err(std::string("snapshot truncated: ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= (std::uint64_t)b[i] << (8 * i);
  return v;
}

template <class Err>
inline double get_f64(std::FILE* f, const char* what) {
  const std::uint64_t u = get_u64<Err>(f, what);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

template <class Err>
inline void get_f64s(std::FILE* f, std::vector<double>& v, std::size_t n, const char* what) {
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = get_f64<Err>(f, what);
}

}  // namespace detail

inline void write_snapshot_macro(const std::string& path, const MacGrid& g,
                                 const VelocityField& u, const StressField& s,
                                 const DensityField& rho, double time, std::uint64_t step,
                                 int nq = 0) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot open snapshot file for writing: " + path);
  detail::FileCloser guard{f};
  std::fwrite("NSFP", 1, 4, f);
  detail::put_u32(f, snapshot_version);
  detail::put_u32(f, 0);
  detail::put_u32(f, (std::uint32_t)g.nx);
  detail::put_u32(f, (std::uint32_t)g.ny);
  detail::put_u32(f, (std::uint32_t)nq);
  detail::put_f64(f, time);
  detail::put_u64(f, step);
  detail::put_f64s(f, u.u1.v);
  detail::put_f64s(f, u.u2.v);
  detail::put_f64s(f, u.p.v);
  detail::put_f64s(f, s.s11.v);
  detail::put_f64s(f, s.s12.v);
  detail::put_f64s(f, s.s22.v);
  detail::put_f64s(f, rho.rho.v);
}

inline void write_snapshot_micro(const std::string& path, const MacGrid& g,
                                 const ConfigDistribution& psi, double time,
                                 std::uint64_t step) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot open snapshot file for writing: " + path);
  detail::FileCloser guard{f};
  std::fwrite("NSFP", 1, 4, f);
  detail::put_u32(f, snapshot_version);
  detail::put_u32(f, 1);
  detail::put_u32(f, (std::uint32_t)g.nx);
  detail::put_u32(f, (std::uint32_t)g.ny);
  detail::put_u32(f, (std::uint32_t)psi.nq);
  detail::put_f64(f, time);
  detail::put_u64(f, step);
  for (const Array2& m : psi.modes) detail::put_f64s(f, m.v);
}

inline void write_snapshot_coupled(const std::string& path, const MacGrid& g,
                                   const VelocityField& u, const ConfigDistribution& psi,
                                   double time, std::uint64_t step) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot open snapshot file for writing: " + path);
  detail::FileCloser guard{f};
  std::fwrite("NSFP", 1, 4, f);
  detail::put_u32(f, snapshot_version);
  detail::put_u32(f, 2);
  detail::put_u32(f, (std::uint32_t)g.nx);
  detail::put_u32(f, (std::uint32_t)g.ny);
  detail::put_u32(f, (std::uint32_t)psi.nq);
  detail::put_f64(f, time);
  detail::put_u64(f, step);
  detail::put_f64s(f, u.u1.v);
  detail::put_f64s(f, u.u2.v);
  detail::put_f64s(f, u.p.v);
  for (const Array2& m : psi.modes) detail::put_f64s(f, m.v);
}

// Reads and validates a snapshot; throws CheckError on malformed content.
inline Snapshot read_snapshot(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw CheckError("cannot open snapshot file: " + path);
  detail::FileCloser guard{f};
  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "NSFP", 4) != 0)
    throw CheckError("snapshot magic mismatch in " + path);
  Snapshot s;
  const std::uint32_t version = detail::get_u32<CheckError>(f, "version");
  if (version != snapshot_version)
    throw CheckError("unsupported snapshot version " + std::to_string(version));
  s.mode = detail::get_u32<CheckError>(f, "mode");
  if (s.mode > 2) throw CheckError("snapshot mode field out of range");
  s.nx = detail::get_u32<CheckError>(f, "nx");
  s.ny = detail::get_u32<CheckError>(f, "ny");
  s.nq = detail::get_u32<CheckError>(f, "nq");
  if (s.nx < 1 || s.ny < 1 || s.nx > 100000 || s.ny > 100000 || s.nq > 64)
    throw CheckError("snapshot dimensions out of range");
  s.time = detail::get_f64<CheckError>(f, "time");
  s.step = detail::get_u64<CheckError>(f, "step");
  const std::size_t nc = (std::size_t)s.nx * s.ny;
  if (s.mode == 0 || s.mode == 2) {
    detail::get_f64s<CheckError>(f, s.u1, (std::size_t)(s.nx + 1) * s.ny, "u1");
    detail::get_f64s<CheckError>(f, s.u2, (std::size_t)s.nx * (s.ny + 1), "u2");
    detail::get_f64s<CheckError>(f, s.p, nc, "p");
  }
  if (s.mode == 0) {
    detail::get_f64s<CheckError>(f, s.s11, nc, "s11");
    detail::get_f64s<CheckError>(f, s.s12, nc, "s12");
    detail::get_f64s<CheckError>(f, s.s22, nc, "s22");
    detail::get_f64s<CheckError>(f, s.rho, nc, "rho");
  } else {
    const std::size_t nmodes = (std::size_t)(s.nq + 1) * (s.nq + 1);
    s.modes.resize(nmodes);
    for (std::size_t m = 0; m < nmodes; ++m)
      detail::get_f64s<CheckError>(f, s.modes[m], nc, "coefficient field");
  }
  unsigned char extra;
  if (std::fread(&extra, 1, 1, f) == 1)
    throw CheckError("snapshot has trailing bytes: " + path);
  return s;
}

// Steady forcing sampled on the staggered faces, stored like a snapshot:
//   "NSFF", u32 version (=1), u32 nx, u32 ny, f64 f1 (nx+1)*ny, f64 f2 nx*(ny+1).
inline void write_forcing_file(const std::string& path, const MacGrid& g, const Array2& f1,
                               const Array2& f2) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot open forcing file for writing: " + path);
  detail::FileCloser guard{f};
  std::fwrite("NSFF", 1, 4, f);
  detail::put_u32(f, 1);
  detail::put_u32(f, (std::uint32_t)g.nx);
  detail::put_u32(f, (std::uint32_t)g.ny);
  detail::put_f64s(f, f1.v);
  detail::put_f64s(f, f2.v);
}

inline void read_forcing_file(const std::string& path, BodyForce& force) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ValidationError("cannot open forcing file: " + path);
  detail::FileCloser guard{f};
  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "NSFF", 4) != 0)
    throw ValidationError("forcing file magic mismatch in " + path);
  const std::uint32_t version = detail::get_u32<ValidationError>(f, "version");
  if (version != 1)
    throw ValidationError("unsupported forcing file version " + std::to_string(version));
  force.fnx = (int)detail::get_u32<ValidationError>(f, "nx");
  force.fny = (int)detail::get_u32<ValidationError>(f, "ny");
  if (force.fnx < 1 || force.fny < 1 || force.fnx > 100000 || force.fny > 100000)
    throw ValidationError("forcing file dimensions out of range");
  detail::get_f64s<ValidationError>(f, force.file_f1,
                                    (std::size_t)(force.fnx + 1) * force.fny, "f1");
  detail::get_f64s<ValidationError>(f, force.file_f2,
                                    (std::size_t)force.fnx * (force.fny + 1), "f2");
  unsigned char extra;
  if (std::fread(&extra, 1, 1, f) == 1)
    throw ValidationError("forcing file has trailing bytes: " + path);
}

}  // namespace nsfp
