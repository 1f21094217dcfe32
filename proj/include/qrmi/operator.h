#ifndef QRMI_OPERATOR_H
#define QRMI_OPERATOR_H

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace qrmi {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Eigenvalues at or below this fraction of the largest eigenvalue are treated as kernel.
inline constexpr double kSupportCutoff = 1e-12;
/// Eigenvalues of L - K within this distance below zero still count as {L >= K}.
inline constexpr double kThresholdTie = 1e-12;
/// Tolerance used when validating states (trace and positivity).
inline constexpr double kStateTolerance = 1e-10;

/// Eigenpairs sorted by descending eigenvalue; eigenvectors are the columns.
struct Spectrum {
    RealVector eigenvalues;
    Matrix eigenvectors;

    int dim() const {
        return static_cast<int>(eigenvalues.size());
    }
    double max() const;
    double min() const;
};

/// Dense Hermitian operator. The stored matrix is exactly Hermitian: inputs
/// are replaced by (M + M^dagger)/2 and the size of the removed
/// anti-Hermitian part is kept in hermiticity_correction().
class HermitianOperator {
   public:
    HermitianOperator() = default;
    explicit HermitianOperator(const Matrix &m);

    static HermitianOperator zero(int dim);
    static HermitianOperator identity(int dim);
    static HermitianOperator diagonal(const RealVector &diag);
    static HermitianOperator diagonal(std::initializer_list<double> diag);
    /// |v><v| (v is not normalized).
    static HermitianOperator projector(const Vector &v);
    static HermitianOperator from_spectrum(const RealVector &eigenvalues, const Matrix &eigenvectors);

    int dim() const {
        return static_cast<int>(m_.rows());
    }
    const Matrix &matrix() const {
        return m_;
    }
    Complex operator()(int i, int j) const {
        return m_(i, j);
    }
    double hermiticity_correction() const {
        return correction_;
    }

    double trace() const;
    double max_abs() const;
    double frobenius_norm() const;
    Spectrum spectrum() const;

    HermitianOperator operator+(const HermitianOperator &other) const;
    HermitianOperator operator-(const HermitianOperator &other) const;
    HermitianOperator operator*(double scale) const;
    /// U * this * U^dagger.
    HermitianOperator conjugated(const Matrix &u) const;

   private:
    Matrix m_;
    double correction_ = 0;
};

inline HermitianOperator operator*(double scale, const HermitianOperator &h) {
    return h * scale;
}

/// A validated quantum state: unit trace and positive semi-definite, both within 1e-10.
class DensityMatrix {
   public:
    DensityMatrix() = default;
    /// Throws std::invalid_argument when the operator is not a state.
    explicit DensityMatrix(HermitianOperator op);

    static DensityMatrix maximally_mixed(int dim);
    /// |psi><psi| / <psi|psi>.
    static DensityMatrix pure(const Vector &psi);
    static DensityMatrix diagonal(std::initializer_list<double> probabilities);
    /// Rescales a nonzero positive operator to unit trace.
    static DensityMatrix normalized(const HermitianOperator &op);
    /// Skips the spectral positivity check; the caller guarantees a state by
    /// construction. Only the trace is verified.
    static DensityMatrix trusted(HermitianOperator op);

    int dim() const {
        return op_.dim();
    }
    const HermitianOperator &op() const {
        return op_;
    }
    const Matrix &matrix() const {
        return op_.matrix();
    }

   private:
    struct Unchecked {};
    DensityMatrix(HermitianOperator op, Unchecked);

    HermitianOperator op_;
};

/// A state on A (x) B with A-major composite index i_A * dimB + i_B.
class BipartiteState {
   public:
    BipartiteState() = default;
    BipartiteState(DensityMatrix state, int dim_a, int dim_b);

    const DensityMatrix &state() const {
        return state_;
    }
    int dim_a() const {
        return dim_a_;
    }
    int dim_b() const {
        return dim_b_;
    }
    int dim() const {
        return dim_a_ * dim_b_;
    }
    DensityMatrix marginal_a() const;
    DensityMatrix marginal_b() const;

   private:
    DensityMatrix state_;
    int dim_a_ = 0;
    int dim_b_ = 0;
};

HermitianOperator tensor(const HermitianOperator &a, const HermitianOperator &b);
DensityMatrix tensor(const DensityMatrix &a, const DensityMatrix &b);
Matrix kron(const Matrix &a, const Matrix &b);
HermitianOperator tensor_power(const HermitianOperator &a, int n);

/// Traces out every subsystem not listed in `keep`. Kept subsystems retain their order.
HermitianOperator partial_trace(const HermitianOperator &m, std::span<const int> dims, std::span<const int> keep);
/// Same contraction for a general (not necessarily Hermitian) matrix.
Matrix partial_trace_matrix(const Matrix &m, std::span<const int> dims, std::span<const int> keep);

enum class Support {
    kFull,  ///< f is applied to every eigenvalue.
    kOnly,  ///< kernel eigenvalues map to 0; the operator must be positive semi-definite.
};

/// f(h) through the spectral decomposition. With Support::kOnly, eigenvalues
/// below kSupportCutoff * lambda_max are mapped to 0, and an eigenvalue below
/// -kStateTolerance * max(1, lambda_max) raises std::domain_error.
HermitianOperator mat_func(const HermitianOperator &h, const std::function<double(double)> &f, Support support);
HermitianOperator mat_func(const Spectrum &spec, const std::function<double(double)> &f, Support support);
/// h^p on the support of h.
HermitianOperator mat_power(const HermitianOperator &h, double p);
HermitianOperator mat_power(const Spectrum &spec, double p);
/// log h on the support of h.
HermitianOperator mat_log(const HermitianOperator &h);
/// Orthogonal projector onto the support of a positive semi-definite operator.
HermitianOperator support_projector(const HermitianOperator &h);
HermitianOperator support_projector(const Spectrum &spec);
/// Number of eigenvalues above the support cutoff.
int support_rank(const Spectrum &spec);

/// {L >= K}: projector onto eigenvectors of L - K with eigenvalue >= -kThresholdTie.
HermitianOperator threshold_projector(const HermitianOperator &l, const HermitianOperator &k);
HermitianOperator threshold_projector(const Spectrum &difference);

/// Pure state on A (x) B (x) C with |psi> = sum_i sqrt(lambda_i) |e_i>_AB |i>_C
/// over support eigenpairs in descending order.
struct Purification {
    Vector psi;
    int dim_a = 0;
    int dim_b = 0;
    int dim_c = 0;

    DensityMatrix density() const;
    /// Reduced state on A (x) C.
    BipartiteState marginal_ac() const;
};
Purification purify(const BipartiteState &rho);

/// U(pi) m U(pi)^dagger for a permutation of equal-dimension subsystems:
/// output subsystem k carries input subsystem perm[k].
HermitianOperator permute_subsystems(const HermitianOperator &m, std::span<const int> dims, std::span<const int> perm);
Matrix permute_subsystems_matrix(const Matrix &m, std::span<const int> dims, std::span<const int> perm);

/// Largest number of copies accepted by symmetrize (n! terms).
inline constexpr int kMaxSymmetrizeCopies = 8;
/// Average of U(pi) m U(pi)^dagger over all permutations of n copies of a d-dimensional factor.
HermitianOperator symmetrize(const HermitianOperator &m, int d, int n);

/// Frobenius norm of [a, b].
double commutator_norm(const Matrix &a, const Matrix &b);
/// Smallest eigenvalue.
double min_eigenvalue(const HermitianOperator &h);
double max_eigenvalue(const HermitianOperator &h);
/// Trace distance (1/2)||a - b||_1.
double trace_distance(const HermitianOperator &a, const HermitianOperator &b);

}  // namespace qrmi

#endif  // QRMI_OPERATOR_H
