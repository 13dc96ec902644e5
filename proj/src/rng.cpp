#include "mcimplicit/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace mcimplicit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() { return splitmix64(key_ + kGolden * counter_++); }

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::uint64_t stream_key(std::uint64_t master, std::string_view label,
                         std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
  auto absorb_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  auto absorb_u64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) absorb_byte(static_cast<unsigned char>(v >> (8 * i)));
  };
  absorb_u64(master);
  for (char c : label) absorb_byte(static_cast<unsigned char>(c));
  absorb_byte(0xFF);  // separator between label and coordinates
  for (std::uint64_t c : coords) absorb_u64(c);
  return splitmix64(h);
}

std::uint64_t double_bits(double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  return bits;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.next_normal();
  return g;
}

Eigen::MatrixXd haar_frame(Eigen::Index d, Eigen::Index k, RngStream& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(d, k, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace mcimplicit
