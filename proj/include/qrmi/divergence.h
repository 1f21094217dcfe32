#ifndef QRMI_DIVERGENCE_H
#define QRMI_DIVERGENCE_H

#include <limits>
#include <span>
#include <vector>

#include "qrmi/operator.h"

namespace qrmi {

enum class DivergenceKind {
    kPetz,
    kSandwiched,
};

const char *to_string(DivergenceKind kind);

/// Order of a Renyi quantity. `value` may be +infinity. Within `limit_window`
/// of 1 the quantities switch to the first-order series D + (alpha - 1) V / 2.
struct AlphaParam {
    double value = 1.0;
    double limit_window = 1e-4;

    AlphaParam(double v);  // NOLINT(google-explicit-constructor): alphas are passed as plain numbers everywhere
    AlphaParam(double v, double window);

    static AlphaParam infinity();
    bool is_infinite() const;
    bool near_one() const;
};

/// A divergence in nats; `support_violation` marks the +infinity cases where
/// the required support condition fails.
struct DivergenceValue {
    double value = 0;
    bool support_violation = false;

    bool finite() const {
        return !support_violation && value < std::numeric_limits<double>::infinity();
    }
};

/// Petz D_alpha or sandwiched D~_alpha of a state rho relative to a positive
/// operator sigma. Petz alpha = 0 is -log tr[Pi_rho sigma]; sandwiched
/// alpha = infinity is log lambda_max(sigma^-1/2 rho sigma^-1/2). Sandwiched
/// alpha = 0 and Petz alpha = infinity are not implemented and throw std::domain_error.
DivergenceValue divergence(DivergenceKind kind, const DensityMatrix &rho, const HermitianOperator &sigma, AlphaParam alpha);

struct RelativeEntropyVariance {
    double d = 0;  ///< D(rho||sigma), nats
    double v = 0;  ///< V(rho||sigma), nats^2
    bool support_violation = false;
};

RelativeEntropyVariance rel_entropy_and_variance(const DensityMatrix &rho, const HermitianOperator &sigma);

/// True if supp(rho) is contained in supp(sigma) up to 1e-10 leaked weight.
bool support_contained(const HermitianOperator &rho, const Spectrum &sigma);

/// Relative gap used to merge eigenvalues into clusters.
inline constexpr double kClusterTolerance = 1e-9;

/// A run [begin, end) of eigenvalues (descending order) treated as one distinct eigenvalue.
struct EigenCluster {
    double value = 0;
    int begin = 0;
    int end = 0;

    int size() const {
        return end - begin;
    }
};

/// Chains eigenvalues whose consecutive gap is at most kClusterTolerance * max|lambda|.
std::vector<EigenCluster> eigen_clusters(const RealVector &descending);

/// Pinching of rho by the spectral projectors of sigma.
HermitianOperator pinch(const HermitianOperator &sigma, const HermitianOperator &rho);
HermitianOperator pinch(const Spectrum &sigma, const HermitianOperator &rho);

/// Number of distinct eigenvalues of sigma, with the clustering above.
int spectrum_count(const HermitianOperator &sigma);
int spectrum_count(const Spectrum &sigma);

/// Classical Renyi divergence of a probability vector p relative to a
/// nonnegative vector q (same length), evaluated in the log domain.
DivergenceValue classical_divergence(std::span<const double> p, std::span<const double> q, double alpha);

/// Classical relative entropy and variance.
RelativeEntropyVariance classical_entropy_variance(std::span<const double> p, std::span<const double> q);

}  // namespace qrmi

#endif  // QRMI_DIVERGENCE_H
