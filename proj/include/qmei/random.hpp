#pragma once

#include <cstdint>
#include <random>

#include "qmei/operators.hpp"

namespace qmei {

using Rng = std::mt19937_64;

/// Ginibre matrix with independent standard complex normal entries.
Matrix ginibre(Index rows, Index cols, Rng& rng);

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
Matrix random_unitary(Index d, Rng& rng);

/// G G^dagger / tr with G a d x rank Ginibre matrix, scaled to `trace`.
DensityOperator random_density(Index d, Rng& rng, double trace = 1.0, Index rank = -1);

/// (G + G^dagger) / 2 for a Ginibre G.
HermitianOperator random_hermitian(Index d, Rng& rng);

}  // namespace qmei
