#ifndef QRMI_MUTUAL_INFO_H
#define QRMI_MUTUAL_INFO_H

#include <cstdint>
#include <utility>

#include "qrmi/divergence.h"
#include "qrmi/operator.h"

namespace qrmi {

/// The testing problem rho_AB against tau_A (x) sigma_B. tau may be any
/// positive operator whose support contains supp(rho_A).
class HypothesisInstance {
   public:
    HypothesisInstance(BipartiteState rho, HermitianOperator tau);

    /// tau = rho_A, giving the ordinary Renyi mutual information.
    static HypothesisInstance mutual_information(const BipartiteState &rho);
    /// tau = 1_A, giving minus the conditional entropy H^up.
    static HypothesisInstance conditional(const BipartiteState &rho);

    const BipartiteState &rho() const {
        return rho_;
    }
    const HermitianOperator &tau() const {
        return tau_;
    }
    int dim_a() const {
        return rho_.dim_a();
    }
    int dim_b() const {
        return rho_.dim_b();
    }
    /// tau (x) sigma on AB.
    HermitianOperator reference(const HermitianOperator &sigma_b) const;

   private:
    BipartiteState rho_;
    HermitianOperator tau_;
};

enum class MIMethod {
    kSibsonClosedForm,
    kFixedPoint,
    kDualityFixedPoint,
    kDirectMinimization,
    kBarrierSdp,
};

const char *to_string(MIMethod method);

struct MIResult {
    double value = 0;          ///< nats
    DensityMatrix minimizer;   ///< sigma_B
    int iterations = 0;
    bool converged = true;
    MIMethod method = MIMethod::kSibsonClosedForm;
    bool support_violation = false;
};

struct DirectOptions {
    int restarts = 20;
    uint64_t seed = 0x5eed;
    int max_iterations = 400;
};

struct MIOptions {
    int max_iterations = 10000;
    /// Cross-check every fixed-point or duality answer against direct_minimization.
    bool validate = false;
    double validate_tolerance = 1e-6;
    DirectOptions direct;
};

/// Petz minimizer sigma_B = M^(1/alpha) / tr M^(1/alpha) with
/// M = tr_A[tau^((1-alpha)/2) rho^alpha tau^((1-alpha)/2)], and
/// I_alpha = alpha/(alpha-1) log tr M^(1/alpha). Requires alpha > 0.
MIResult sibson_minimizer(const HypothesisInstance &inst, AlphaParam alpha);

/// Petz I_alpha for alpha >= 0 (finite). alpha = 0 is the closed-form limit
/// -log lambda_max(tr_A[(tau (x) 1) Pi_rho]).
MIResult petz_mi(const HypothesisInstance &inst, AlphaParam alpha);

/// One application of X_alpha: returns (X_alpha(sigma), chi(sigma)). Defined for
/// alpha >= 1/2, alpha != 1. Throws std::runtime_error when sigma does not
/// cover supp(rho_B).
std::pair<DensityMatrix, double> sandwiched_fp_map(const HypothesisInstance &inst, double alpha, const DensityMatrix &sigma);

/// Sandwiched I~_alpha for alpha >= 1/2, including alpha = infinity. Below 1
/// the damped fixed-point iteration is used. Above 1 the duality relation gives
/// a lower bound and the best response to the dual optimum an upper bound; when
/// they differ by more than 1e-9 the best response is refined by quasi-Newton
/// descent. alpha = infinity solves log min{tr S : rho <= tau (x) S}.
MIResult sandwiched_mi(const HypothesisInstance &inst, AlphaParam alpha, const MIOptions &options = {});

/// -I~_beta(rho_AC || tau^-1) with beta = alpha/(2 alpha - 1), computed on a
/// purification. The returned minimizer lives on C. For alpha > 1 the result
/// is flagged non-converged unless the best response on B matches it to 1e-9.
MIResult dual_mi(const HypothesisInstance &inst, AlphaParam alpha, const MIOptions &options = {});

/// D(rho_AB || tau (x) rho_B) and V(rho_AB || tau (x) rho_B).
RelativeEntropyVariance mi_variance(const HypothesisInstance &inst);

/// min over sigma_B of the chosen divergence by quasi-Newton descent on a
/// Cholesky-factor parametrization, best of `restarts` starts.
MIResult direct_minimization(const HypothesisInstance &inst, DivergenceKind kind, AlphaParam alpha, const DirectOptions &options = {});

enum class InformationKind {
    kMutualInfo,     ///< tau = rho_A
    kConditionalUp,  ///< tau = 1_A, returns -I_alpha(rho || 1_A)
};

double specialize(InformationKind info, const BipartiteState &rho, AlphaParam alpha, DivergenceKind kind);

/// Operator inverse of tau on its support.
HermitianOperator support_inverse(const HermitianOperator &tau);

}  // namespace qrmi

#endif  // QRMI_MUTUAL_INFO_H
