#ifndef QRMI_RANDOM_H
#define QRMI_RANDOM_H

#include <cstdint>
#include <random>

#include "qrmi/operator.h"

namespace qrmi {

using Rng = std::mt19937_64;

/// Matrix with i.i.d. standard complex Gaussian entries.
Matrix ginibre(int rows, int cols, Rng &rng);
/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
Matrix random_unitary(int dim, Rng &rng);
/// Full-rank random state G G^dagger / tr, G Ginibre.
DensityMatrix random_state(int dim, Rng &rng);
/// Random state of the given rank.
DensityMatrix random_state(int dim, int rank, Rng &rng);
BipartiteState random_bipartite(int dim_a, int dim_b, Rng &rng);
/// GUE-like Hermitian operator (G + G^dagger) / 2.
HermitianOperator random_hermitian(int dim, Rng &rng);
/// Unnormalized PSD operator G G^dagger / dim.
HermitianOperator random_psd(int dim, Rng &rng);
/// Diagonal state with random probabilities.
DensityMatrix random_diagonal_state(int dim, Rng &rng);

}  // namespace qrmi

#endif  // QRMI_RANDOM_H
