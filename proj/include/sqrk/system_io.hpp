#pragma once

// On-disk forms of a CorruptedSystem.
//
// Binary container (little-endian, 64-bit fields, doubles as IEEE-754):
//   char[8]  magic "SQRKSYS1"
//   u64 m, u64 n, f64 beta, u64 seed, u64 |C|
//   f64 A[m*n] (row-major), f64 x_star[n], f64 b[m], f64 c[m], f64 b_hat[m]
//   u64 C[|C|] (ascending)
//
// CSV dump (text, %.17g):
//   m,n,beta,seed          header line
//   <m>,<n>,<beta>,<seed>
//   m lines: a_i0,...,a_i(n-1),b_i,c_i,b_hat_i
//   one line: x_star_0,...,x_star_(n-1)

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/problem.hpp"

namespace sqrk {

static_assert(std::endian::native == std::endian::little, "binary system format assumes little-endian");

namespace detail {

inline constexpr char kSystemMagic[8] = {'S', 'Q', 'R', 'K', 'S', 'Y', 'S', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_array(std::ostream& out, std::span<const T> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated system file");
  return v;
}

template <typename T>
std::vector<T> read_array(std::istream& in, std::size_t count) {
  std::vector<T> v(count);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T))))
    throw IoError("truncated system file");
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_system(std::ostream& out, const CorruptedSystem& sys) {
  out.write(detail::kSystemMagic, sizeof detail::kSystemMagic);
  detail::write_pod<std::uint64_t>(out, sys.rows());
  detail::write_pod<std::uint64_t>(out, sys.cols());
  detail::write_pod<double>(out, sys.beta());
  detail::write_pod<std::uint64_t>(out, sys.seed());
  detail::write_pod<std::uint64_t>(out, sys.corrupt_support().size());
  detail::write_array(out, sys.a().inner().values());
  detail::write_array(out, sys.x_star());
  detail::write_array(out, sys.b());
  detail::write_array(out, sys.c());
  detail::write_array(out, sys.b_hat());
  std::vector<std::uint64_t> support(sys.corrupt_support().begin(), sys.corrupt_support().end());
  detail::write_array<std::uint64_t>(out, support);
}

inline CorruptedSystem read_system(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, detail::kSystemMagic, sizeof magic) != 0)
    throw IoError("not a system file (bad magic)");
  const auto m = detail::read_pod<std::uint64_t>(in);
  const auto n = detail::read_pod<std::uint64_t>(in);
  const auto beta = detail::read_pod<double>(in);
  const auto seed = detail::read_pod<std::uint64_t>(in);
  const auto count = detail::read_pod<std::uint64_t>(in);
  if (m == 0 || n == 0 || count > m || m > (std::uint64_t{1} << 40) / n) throw IoError("corrupt system header");
  auto a = detail::read_array<double>(in, m * n);
  auto x_star = detail::read_array<double>(in, n);
  auto b = detail::read_array<double>(in, m);
  auto c = detail::read_array<double>(in, m);
  auto b_hat = detail::read_array<double>(in, m);
  auto raw_support = detail::read_array<std::uint64_t>(in, count);
  std::vector<std::size_t> support(raw_support.begin(), raw_support.end());
  try {
    return CorruptedSystem::restore(RowNormalizedMatrix::adopt(DenseMatrix(m, n, std::move(a))), std::move(x_star),
                                    std::move(b), std::move(c), std::move(b_hat),
                                    IndexSet::from_sorted(std::move(support), m), beta, seed);
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid system file: ") + e.what());
  }
}

inline void save_system(const std::filesystem::path& path, const CorruptedSystem& sys) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_system(out, sys);
  if (!out) throw IoError("failed writing " + path.string());
}

inline CorruptedSystem load_system(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_system(in);
}

inline void write_system_csv(std::ostream& out, const CorruptedSystem& sys) {
  out << "m,n,beta,seed\n";
  out << sys.rows() << ',' << sys.cols() << ',' << detail::format_double(sys.beta()) << ',' << sys.seed() << '\n';
  for (std::size_t i = 0; i < sys.rows(); ++i) {
    for (double v : sys.a().row(i)) out << detail::format_double(v) << ',';
    out << detail::format_double(sys.b()[i]) << ',' << detail::format_double(sys.c()[i]) << ','
        << detail::format_double(sys.b_hat()[i]) << '\n';
  }
  for (std::size_t j = 0; j < sys.cols(); ++j) {
    if (j) out << ',';
    out << detail::format_double(sys.x_star()[j]);
  }
  out << '\n';
}

}  // namespace sqrk
