#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace duet {

/// All recoverable failures (bad input files, schema mismatches, empty
/// training sets) surface as this exception type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Feature schema. Column counts are fixed by the four matching families
// and the entity attention features.
inline constexpr int kQwDwCols = 18;
inline constexpr int kQwDeCols = 48;
inline constexpr int kQeDwCols = 24;
inline constexpr int kQeDeCols = 12;
inline constexpr int kWordCols = kQwDwCols + kQwDeCols;
inline constexpr int kEntityCols = kQeDwCols + kQeDeCols;
inline constexpr int kWordAttCols = 1;
inline constexpr int kEntityAttCols = 4;

static_assert(kWordCols == 66);
static_assert(kEntityCols == 36);
static_assert(kEntityAttCols == 4);

enum class Field { kTitle = 0, kBody = 1 };

inline const char* field_name(Field f) { return f == Field::kTitle ? "title" : "body"; }

}  // namespace duet
