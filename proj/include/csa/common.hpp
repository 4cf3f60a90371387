#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace csa {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Vector<double>;
using Mat = Matrix<double>;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error categories map onto CLI exit codes: validation -> 2, numeric -> 3, io -> 4.
enum class ErrorKind {
  kInvalidArgument,
  kInsufficientData,
  kValidation,
  kParse,
  kDegenerateEnvelope,
  kInfeasible,
  kIterationLimit,
  kEmptyRegion,
  kUndefinedMetric,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::kDegenerateEnvelope:
      case ErrorKind::kInfeasible:
      case ErrorKind::kIterationLimit:
      case ErrorKind::kEmptyRegion:
      case ErrorKind::kUndefinedMetric:
        return 3;
      case ErrorKind::kIo:
        return 4;
      default:
        return 2;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a named component and index: mix(seed ^ hash(name)) then mix with index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view component,
                                    std::uint64_t index = 0) {
  return mix64(mix64(seed ^ fnv1a(component)) + index);
}

// Smallest rank k >= 1 with k >= level * n; the slack absorbs products like 0.9 * 10
// landing one ulp above an integer.
inline Index ceil_rank(double level_times_n) {
  const double r = std::ceil(level_times_n - 1e-9);
  return r < 1.0 ? 1 : static_cast<Index>(r);
}

}  // namespace csa
