#ifndef QRMI_UNIVERSAL_STATE_H
#define QRMI_UNIVERSAL_STATE_H

#include <cstdint>
#include <vector>

#include "qrmi/operator.h"

namespace qrmi {

inline constexpr int kMaxUniversalCopies = 7;
inline constexpr int kMaxUniversalLocalDim = 3;
/// Inputs to domination_gap may deviate from permutation invariance by this much.
inline constexpr double kPermutationInvarianceTolerance = 1e-8;

/// g_{n,d} = C(n + d^2 - 1, n), the dimension of the symmetric subspace of
/// (C^d (x) C^d)^(x)n. Exact; throws std::overflow_error past 64 bits.
uint64_t sym_dim(int n, int d);

/// Permutation-invariant state omega on (C^d)^(x)n with tau <= g omega for
/// every permutation-invariant state tau.
struct UniversalState {
    int n = 0;
    int d = 0;
    DensityMatrix omega;
    uint64_t g = 0;
};

/// omega = (1 / (g n!)) sum_pi d^{#cycles(pi)} U(pi). Refuses n > 7 or d > 3
/// with std::length_error.
UniversalState universal_state(int n, int d);

/// Shared immutable instance per (n, d); safe to call from several threads.
const UniversalState &cached_universal_state(int n, int d);

/// Cycle types of S_n (partitions of n, parts descending) with class sizes.
struct CycleClass {
    std::vector<int> parts;
    uint64_t size = 0;
};
std::vector<CycleClass> cycle_classes(int n);

/// max over adjacent transpositions of ||U m U^dagger - m||_max.
double permutation_defect(const HermitianOperator &m, int d, int n);

/// lambda_min(g omega - tau). Throws std::invalid_argument when tau is not
/// permutation invariant within kPermutationInvarianceTolerance.
double domination_gap(const DensityMatrix &tau, const UniversalState &u);

/// Number of distinct eigenvalues of omega (clusters at kClusterTolerance).
int block_count(const UniversalState &u);

}  // namespace qrmi

#endif  // QRMI_UNIVERSAL_STATE_H
