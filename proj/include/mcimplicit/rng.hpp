#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace mcimplicit {

// Counter-based stream: output i is splitmix64 applied to key + i * golden.
// Streams with different keys are independent; a stream never perturbs any
// other stream regardless of how many values are drawn from it.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  double next_uniform();  // [0, 1)
  double next_normal();   // standard normal via Box-Muller

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Derives a stream key from (master seed, purpose label, coordinates). Keys
// depend on coordinate *values*, so adding a grid axis to a sweep never
// shifts the randomness of existing cells.
std::uint64_t stream_key(std::uint64_t master, std::string_view label,
                         std::initializer_list<std::uint64_t> coords = {});

// Bit pattern of a double, for keying streams on real-valued coordinates.
std::uint64_t double_bits(double x);

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng);

// Haar-distributed d x k orthonormal frame: QR of a Gaussian with the Q
// columns flipped so diag(R) > 0.
Eigen::MatrixXd haar_frame(Eigen::Index d, Eigen::Index k, RngStream& rng);

}  // namespace mcimplicit
