#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace sublinmap {

// Dense row-major storage throughout: rows are frames, so per-frame access
// and the on-disk row-major layout line up.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matf = Mat<float>;
using Matd = Mat<double>;
using Vecf = Vec<float>;
using Vecd = Vec<double>;

// 1-based frame/place index, as in all user-facing contracts.
using PlaceIndex = std::int64_t;

// Phase of frame i under period tau: j in [1, tau] with i mod tau = j - 1.
inline int phase_of(PlaceIndex i, std::int64_t tau) {
  return static_cast<int>(i % tau) + 1;
}

// File format versions (printed by `sublinmap --version`).
inline constexpr std::uint16_t kFeatureFormatVersion = 1;  // SLMF
inline constexpr std::uint16_t kBankFormatVersion = 1;     // SLMB
inline constexpr std::uint16_t kMapFormatVersion = 1;      // SLMC

}  // namespace sublinmap
