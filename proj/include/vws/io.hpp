#ifndef VWS_IO_HPP
#define VWS_IO_HPP

// Flat binary and CSV serialization of grid fields.
//
// Binary layout (little-endian):
//   bytes 0..3   magic "VWSF"
//   u32          d
//   u32          n (cells per axis)
//   u32          N (target components)
//   u32          kind: 0 = node (N per node), 1 = cell (N per cell),
//                      2 = cell gradient (N*d per cell)
//   f64[...]     values, row-major with x fastest, components innermost

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vws/field.hpp"

namespace vws::io {

static_assert(std::endian::native == std::endian::little, "binary field format assumes a little-endian host");

enum class FieldKind : std::uint32_t { node = 0, cell = 1, cell_gradient = 2 };

struct RawField {
  int dim = 1;
  int n = 2;
  int targets = 1;
  FieldKind kind = FieldKind::node;
  std::vector<double> values;
};

inline constexpr char kMagic[4] = {'V', 'W', 'S', 'F'};

inline void write_raw(std::ostream& os, const RawField& f) {
  os.write(kMagic, 4);
  const std::uint32_t hdr[4] = {static_cast<std::uint32_t>(f.dim), static_cast<std::uint32_t>(f.n),
                                static_cast<std::uint32_t>(f.targets), static_cast<std::uint32_t>(f.kind)};
  os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("field write failed");
}

inline RawField read_raw(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw InvalidArgument("field read: bad magic");
  std::uint32_t hdr[4];
  is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!is) throw InvalidArgument("field read: truncated header");
  RawField f;
  f.dim = static_cast<int>(hdr[0]);
  f.n = static_cast<int>(hdr[1]);
  f.targets = static_cast<int>(hdr[2]);
  require(hdr[3] <= 2, "field read: unknown kind");
  f.kind = static_cast<FieldKind>(hdr[3]);
  const Grid g(f.dim, f.n);
  std::size_t count = 0;
  switch (f.kind) {
    case FieldKind::node: count = g.node_count() * hdr[2]; break;
    case FieldKind::cell: count = g.cell_count() * hdr[2]; break;
    case FieldKind::cell_gradient: count = g.cell_count() * hdr[2] * hdr[0]; break;
  }
  f.values.resize(count);
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw InvalidArgument("field read: truncated payload");
  return f;
}

inline void write_binary(std::ostream& os, const SobolevFunction& u) {
  write_raw(os, {u.grid().dim(), u.grid().n(), u.targets(), FieldKind::node, u.values()});
}
inline void write_binary(std::ostream& os, const VectorField& f) {
  write_raw(os, {f.grid().dim(), f.grid().n(), f.targets(), FieldKind::cell_gradient, f.values()});
}
inline void write_binary(std::ostream& os, const ScalarField& f) {
  write_raw(os, {f.grid().dim(), f.grid().n(), 1, f.location() == Location::node ? FieldKind::node : FieldKind::cell,
                 f.values()});
}

inline SobolevFunction read_sobolev(std::istream& is) {
  RawField r = read_raw(is);
  require(r.kind == FieldKind::node, "field read: expected a node field");
  Grid g(r.dim, r.n);
  SobolevFunction probe(g, r.targets, r.values, false);
  const bool zero = probe.trace_is_zero();
  return SobolevFunction(g, r.targets, std::move(r.values), zero);
}

inline VectorField read_vector_field(std::istream& is) {
  RawField r = read_raw(is);
  require(r.kind == FieldKind::cell_gradient, "field read: expected a cell gradient field");
  return VectorField(Grid(r.dim, r.n), r.targets, std::move(r.values));
}

inline ScalarField read_scalar_field(std::istream& is) {
  RawField r = read_raw(is);
  require(r.targets == 1 && r.kind != FieldKind::cell_gradient, "field read: expected a scalar field");
  return ScalarField(Grid(r.dim, r.n), r.kind == FieldKind::node ? Location::node : Location::cell,
                     std::move(r.values));
}

template <class F>
void save_binary(const std::string& path, const F& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_binary(os, field);
}

namespace detail {
inline void write_coords(std::ostream& os, const Point& x, int dim) {
  os << x[0];
  if (dim == 2) os << ',' << x[1];
}
inline void coord_header(std::ostream& os, int dim) { os << (dim == 2 ? "x,y" : "x"); }
}  // namespace detail

/// CSV: one row per node, coordinates then the N components.
inline void write_csv(std::ostream& os, const SobolevFunction& u) {
  const Grid& g = u.grid();
  os << std::setprecision(17);
  detail::coord_header(os, g.dim());
  for (int c = 0; c < u.targets(); ++c) os << ",u" << c;
  os << '\n';
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    detail::write_coords(os, g.node_point(k), g.dim());
    for (int c = 0; c < u.targets(); ++c) os << ',' << u.at(k, c);
    os << '\n';
  }
}

/// CSV: one row per cell center, coordinates then the N*d components.
inline void write_csv(std::ostream& os, const VectorField& f) {
  const Grid& g = f.grid();
  os << std::setprecision(17);
  detail::coord_header(os, g.dim());
  for (int c = 0; c < f.targets(); ++c)
    for (int a = 0; a < g.dim(); ++a) os << ",f" << c << '_' << a;
  os << '\n';
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    detail::write_coords(os, g.cell_center(k), g.dim());
    for (double v : f.cell(k)) os << ',' << v;
    os << '\n';
  }
}

inline void write_csv(std::ostream& os, const ScalarField& f, const std::string& column = "value") {
  const Grid& g = f.grid();
  os << std::setprecision(17);
  detail::coord_header(os, g.dim());
  os << ',' << column << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    detail::write_coords(os, f.location() == Location::node ? g.node_point(k) : g.cell_center(k), g.dim());
    os << ',' << f[k] << '\n';
  }
}

/// Weight export: cell coordinates, omega.
inline void write_csv(std::ostream& os, const Weight& w) {
  write_csv(os, ScalarField(w.grid(), Location::cell, w.values()), "omega");
}

}  // namespace vws::io

#endif  // VWS_IO_HPP
