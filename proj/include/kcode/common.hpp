#ifndef KCODE_COMMON_HPP
#define KCODE_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace kcode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or sample-kind mismatch between inputs.
struct DimensionError : Error {
  using Error::Error;
};

// Singular systems, indefinite quadratics, invalid kernel parameters.
struct NumericError : Error {
  using Error::Error;
};

// All dictionary atoms coincide in RKHS; the ratio objective is undefined.
struct CollapsedDictionaryError : NumericError {
  using NumericError::NumericError;
};

// Malformed config / matrix / label files. Message carries file:line context.
struct ParseError : Error {
  using Error::Error;
};

// Seedable generator with hand-rolled output distributions so that streams
// are identical across standard library implementations. The engine is
// std::mt19937_64; uniforms take the top 53 bits; normals use Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return state_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian();

  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Runs fn(i) for i in [0, n). With threads <= 1 this is a plain loop;
// otherwise indices are split into contiguous blocks, one thread per block.
// fn must write only to index-i slots so results match the serial order.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

// Thread-count override from the KCODE_THREADS environment variable
// (defaults to 1; values < 1 are clamped to 1).
int thread_count_from_env();

}  // namespace kcode

#endif
