#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hcast {

using Scalar = double;
using Matrix = Eigen::MatrixX<Scalar>;
using Vector = Eigen::VectorX<Scalar>;
using Index = Eigen::Index;

/// Boolean row mask aligned with the time index.
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Missing values are quiet NaNs throughout; CSV empty field <=> missing.
inline constexpr Scalar kMissing = std::numeric_limits<Scalar>::quiet_NaN();

inline bool is_missing(Scalar v) { return std::isnan(v); }

inline Mask all_true(Index n) { return Mask::Constant(n, true); }

inline Index count_true(const Mask& m) { return m.count(); }

// Error taxonomy; the CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Formats a double with 17 significant digits (lossless for IEEE doubles).
std::string format_g17(Scalar v);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_shortest(Scalar v);

}  // namespace hcast
