#ifndef QRMI_HYPOTHESIS_LAB_H
#define QRMI_HYPOTHESIS_LAB_H

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrmi/mutual_info.h"
#include "qrmi/operator.h"

namespace qrmi {

/// Largest n-copy Hilbert space dimension (dA dB)^n handled by this module.
inline constexpr int kMaxTestDim = 4096;
/// Tests may have eigenvalues this far outside [0, 1].
inline constexpr double kTestEigenvalueSlack = 1e-10;

/// Shape of an n-copy test. Operators act on A^n (x) B^n: all A copies first,
/// first copy most significant within each group.
struct TestLayout {
    int n = 1;
    int dim_a = 1;
    int dim_b = 1;

    int dim_a_n() const;
    int dim_b_n() const;
    int dim() const;
};

/// A test 0 <= Q <= 1 stored as Q = sum_i w_i v_i v_i^dagger with orthonormal
/// v_i (columns of `vectors`) and weights w_i in [0, 1].
class TestOperator {
   public:
    TestOperator() = default;
    /// Projector onto the span of orthonormal columns.
    static TestOperator projector(Matrix basis, TestLayout layout);
    /// Any operator with spectrum in [-1e-10, 1 + 1e-10]; throws
    /// std::invalid_argument otherwise.
    static TestOperator general(const HermitianOperator &q, TestLayout layout);
    static TestOperator identity(TestLayout layout);
    static TestOperator zero(TestLayout layout);

    const TestLayout &layout() const {
        return layout_;
    }
    int n() const {
        return layout_.n;
    }
    int dim() const {
        return layout_.dim();
    }
    const Matrix &vectors() const {
        return vectors_;
    }
    const RealVector &weights() const {
        return weights_;
    }
    /// tr Q.
    double rank_weight() const;
    /// Dense Q.
    HermitianOperator q() const;

   private:
    TestOperator(Matrix vectors, RealVector weights, TestLayout layout);

    Matrix vectors_;
    RealVector weights_;
    TestLayout layout_;
};

/// rho^(x)n rearranged to the A^n (x) B^n ordering. Throws std::length_error
/// above kMaxTestDim.
HermitianOperator nfold_state(const BipartiteState &rho, int n);

/// tau^(x)n (x) omega_n where omega_n acts on B^n.
HermitianOperator nfold_reference(const HermitianOperator &tau, const HermitianOperator &omega_n, int n);

/// tr[(1 - Q) rho^(x)n], clamped to [0, 1] after a 1e-10 consistency check.
double type1_error(const TestOperator &t, const BipartiteState &rho);

/// max over all states sigma on B^n of tr[(tau^(x)n (x) sigma) Q], computed as
/// lambda_max(tr_{A^n}[(tau^(x)n (x) 1) Q]).
double type2_error_worst(const TestOperator &t, const HermitianOperator &tau);

/// {L >= e^mu K}. mu = -inf gives {L >= 0}, mu = +inf the zero test. An empty
/// layout (n = 0) stands for n = 1 on (l.dim(), 1).
TestOperator np_projector_test(const HermitianOperator &l, const HermitianOperator &k, double mu, TestLayout layout = {0, 0, 0});

/// g_{n,d} with d = max(dA, dB).
uint64_t universal_factor(const HypothesisInstance &inst, int n);

struct HoeffdingTest {
    TestOperator test;
    double lambda = 0;       ///< log threshold lambda_n
    double information = 0;  ///< Petz I_s of the instance
    uint64_t g = 0;
    /// exp(((1-s)/s)(log g + nR - n I_s)), the guaranteed type-I bound.
    double alpha_bound = 0;
    /// exp(-nR), the guaranteed worst-case type-II bound.
    double beta_bound = 0;
};

/// {rho^(x)n >= e^lambda tau^(x)n (x) omega_n} with
/// lambda = (1/s)(log g + n(R - (1 - s) I_s)), 0 < s < 1.
HoeffdingTest hoeffding_test(const HypothesisInstance &inst, int n, double s, double rate);

/// Outcome labels are (cluster id of K, index within that cluster's eigenbasis).
struct PinchedPair {
    std::vector<std::pair<int, int>> labels;
    std::vector<double> p;  ///< P_n: eigenvalues of the pinched n-copy state
    std::vector<double> q;  ///< Q_n: matching eigenvalues of K
    int n = 1;
};

/// The pinched test at one threshold, with the quantities its guarantees are stated in.
struct PinchedOutcome {
    double mu = 0;
    double alpha1 = 0;      ///< type-I error of the test
    double beta = 0;        ///< worst-case type-II error of the test
    double p_below = 0;     ///< Pr_P[log P - log Q < mu]
    double q_at_least = 0;  ///< Pr_Q[log P - log Q >= mu]
    uint64_t g = 0;
};

/// Joint eigenbasis of K = tau^(x)n (x) omega_n and pinch(K, rho^(x)n), built
/// block by block over the eigenspaces of K without forming n-copy matrices.
class PinchedDecomposition {
   public:
    PinchedDecomposition(const HypothesisInstance &inst, int n);
    ~PinchedDecomposition();
    PinchedDecomposition(PinchedDecomposition &&) noexcept;
    PinchedDecomposition &operator=(PinchedDecomposition &&) noexcept;

    const PinchedPair &pair() const;
    uint64_t g() const;
    int n() const;
    /// Number of distinct eigenvalues of K.
    int cluster_count() const;

    /// Errors of {pinch(K, rho^(x)n) >= e^mu K}.
    PinchedOutcome evaluate(double mu) const;
    /// The same test as a dense-capable TestOperator.
    TestOperator test(double mu) const;

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct PinchedTestResult {
    TestOperator test;
    PinchedPair pair;
    PinchedOutcome outcome;
};

PinchedTestResult pinched_test_and_distributions(const HypothesisInstance &inst, int n, double mu);

/// (1/s)(log g + nR + (s - 1) D_s(P_n || Q_n)) for s > 1.
double strong_converse_mu(const PinchedPair &pair, uint64_t g, double s, double rate);
double strong_converse_mu(const HypothesisInstance &inst, int n, double s, double rate);

enum class BoundKind {
    kExact,
    kLowerBound,
    kAchievedByTest,
};
const char *to_string(BoundKind kind);

struct TradeoffRecord {
    double mu = 0;
    double alpha1 = 0;
    double beta = 0;  ///< type-II error actually spent
    std::shared_ptr<const TestOperator> test;
    BoundKind bound_kind = BoundKind::kExact;
};

/// Minimal type-I error of a randomized test of rho against sigma with type-II
/// error at most e^mu. The boundary shell is randomized so the budget is met exactly.
TradeoffRecord simple_np_tradeoff(const DensityMatrix &rho, const DensityMatrix &sigma, double mu);

/// The same problem for classical atoms (p_i, q_i); p is a probability vector
/// and q nonnegative.
struct ClassicalTradeoff {
    double alpha1 = 0;
    double beta = 0;
};
ClassicalTradeoff classical_np_tradeoff(std::span<const double> p, std::span<const double> q, double mu);

/// Atoms of n i.i.d. copies of (p, q) grouped by type: one atom per
/// composition of n, carrying the total P^n and Q^n mass of its type class.
/// Throws std::length_error beyond 10^7 types.
struct ClassicalAtoms {
    std::vector<double> p;
    std::vector<double> q;
};
ClassicalAtoms iid_type_atoms(std::span<const double> p, std::span<const double> q, int n);

struct CumulantValue {
    double value = 0;
    bool divergent = false;  ///< some p > 0 has q = 0 and t > 0
};
/// (1/n) log sum_i p_i^(1+t) q_i^(-t), for t >= -1/2.
CumulantValue classical_cumulant(const PinchedPair &pair, double t);

/// CSV rows `n,mu,alpha1,beta,bound_kind` with 17 significant digits.
struct TradeoffRow {
    int n = 1;
    TradeoffRecord record;
};
std::string tradeoff_csv(std::span<const TradeoffRow> rows);

}  // namespace qrmi

#endif  // QRMI_HYPOTHESIS_LAB_H
