#include "qrmi/operator.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qrmi/random.h"

using namespace qrmi;

namespace {

double max_diff(const Matrix &a, const Matrix &b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Permutation unitary built directly from basis-index relabeling: output
// subsystem k carries input subsystem perm[k].
Matrix permutation_unitary(int d, const std::vector<int> &perm) {
    const int n = static_cast<int>(perm.size());
    int dim = 1;
    for (int k = 0; k < n; k++) {
        dim *= d;
    }
    Matrix u = Matrix::Zero(dim, dim);
    std::vector<int> digits(n);
    for (int x = 0; x < dim; x++) {
        int r = x;
        for (int k = n - 1; k >= 0; k--) {
            digits[k] = r % d;
            r /= d;
        }
        int y = 0;
        for (int k = 0; k < n; k++) {
            y = y * d + digits[perm[k]];
        }
        u(y, x) = 1;
    }
    return u;
}

}  // namespace

TEST(operator, hermitization_records_correction) {
    Matrix m(2, 2);
    m << 1, Complex(0, 1e-3), 0, 2;
    HermitianOperator h(m);
    EXPECT_NEAR(h.hermiticity_correction(), 5e-4, 1e-15);
    EXPECT_LE(max_diff(h.matrix(), h.matrix().adjoint()), 1e-15);
}

TEST(operator, spectrum_descending_and_reconstructs) {
    Rng rng(11);
    for (int trial = 0; trial < 10; trial++) {
        HermitianOperator h = random_hermitian(6, rng);
        Spectrum s = h.spectrum();
        for (int i = 1; i < s.dim(); i++) {
            EXPECT_GE(s.eigenvalues(i - 1), s.eigenvalues(i));
        }
        Matrix u = s.eigenvectors;
        EXPECT_LE((u.adjoint() * u - Matrix::Identity(6, 6)).norm(), 1e-9);
        Matrix rebuilt = u * s.eigenvalues.cast<Complex>().asDiagonal() * u.adjoint();
        EXPECT_LE((rebuilt - h.matrix()).norm(), 1e-9 * std::max(1.0, h.frobenius_norm()));
    }
}

TEST(operator, density_matrix_validation) {
    EXPECT_THROW(DensityMatrix(HermitianOperator::diagonal({0.5, 0.4})), std::invalid_argument);
    EXPECT_THROW(DensityMatrix(HermitianOperator::diagonal({1.1, -0.1})), std::invalid_argument);
    EXPECT_NO_THROW(DensityMatrix(HermitianOperator::diagonal({0.7, 0.3})));
}

TEST(operator, tensor_examples) {
    EXPECT_LE(max_diff(tensor(HermitianOperator::identity(2), HermitianOperator::identity(2)).matrix(), Matrix::Identity(4, 4)), 0);
    HermitianOperator t = tensor(HermitianOperator::diagonal({1, 0}), HermitianOperator::diagonal({0, 1}));
    EXPECT_LE(max_diff(t.matrix(), HermitianOperator::diagonal({0, 1, 0, 0}).matrix()), 0);
    DensityMatrix pp = tensor(DensityMatrix::maximally_mixed(2), DensityMatrix::maximally_mixed(2));
    EXPECT_LE(max_diff(pp.matrix(), DensityMatrix::maximally_mixed(4).matrix()), 1e-16);
}

TEST(operator, partial_trace_examples) {
    Rng rng(3);
    DensityMatrix rho = random_state(3, rng);
    DensityMatrix sigma = random_state(3, rng);
    const int dims[] = {3, 3};
    const int keep0[] = {0};
    const int keep1[] = {1};
    EXPECT_LE(max_diff(partial_trace(tensor(rho, sigma).op(), dims, keep0).matrix(), rho.matrix()), 1e-14);
    EXPECT_LE(max_diff(partial_trace(tensor(rho, sigma).op(), dims, keep1).matrix(), sigma.matrix()), 1e-14);

    Vector bell = Vector::Zero(4);
    bell(0) = bell(3) = 1 / std::sqrt(2.0);
    HermitianOperator bp = HermitianOperator::projector(bell);
    const int qd[] = {2, 2};
    EXPECT_LE(max_diff(partial_trace(bp, qd, keep0).matrix(), DensityMatrix::maximally_mixed(2).matrix()), 1e-15);
    EXPECT_LE(max_diff(partial_trace(bp, qd, keep1).matrix(), DensityMatrix::maximally_mixed(2).matrix()), 1e-15);
    EXPECT_LE(max_diff(partial_trace(HermitianOperator::identity(4), qd, keep1).matrix(), 2 * Matrix::Identity(2, 2)), 0);
}

TEST(operator, partial_trace_recovers_scaled_factors) {
    Rng rng(5);
    for (int trial = 0; trial < 5; trial++) {
        HermitianOperator a = random_psd(2, rng);
        HermitianOperator b = random_psd(3, rng);
        HermitianOperator c = random_psd(2, rng);
        HermitianOperator abc = tensor(tensor(a, b), c);
        const int dims[] = {2, 3, 2};
        const int keep_b[] = {1};
        const int keep_ac[] = {0, 2};
        EXPECT_LE(max_diff(partial_trace(abc, dims, keep_b).matrix(), a.trace() * c.trace() * b.matrix()), 1e-12);
        EXPECT_LE(max_diff(partial_trace(abc, dims, keep_ac).matrix(), b.trace() * tensor(a, c).matrix()), 1e-12);
        EXPECT_NEAR(partial_trace(abc, dims, keep_b).trace(), abc.trace(), 1e-12);
    }
}

TEST(operator, partial_trace_dimension_mismatch) {
    const int dims[] = {2, 2};
    const int keep[] = {0};
    EXPECT_THROW(partial_trace(HermitianOperator::identity(3), dims, keep), std::invalid_argument);
}

TEST(operator, mat_func_examples) {
    HermitianOperator r = mat_func(HermitianOperator::diagonal({4, 1}), [](double x) { return std::sqrt(x); }, Support::kFull);
    EXPECT_LE(max_diff(r.matrix(), HermitianOperator::diagonal({2, 1}).matrix()), 1e-14);
    HermitianOperator inv = mat_func(HermitianOperator::diagonal({0.5, 0.5, 0}), [](double x) { return 1 / x; }, Support::kOnly);
    EXPECT_LE(max_diff(inv.matrix(), HermitianOperator::diagonal({2, 2, 0}).matrix()), 1e-14);
    HermitianOperator sq = mat_power(HermitianOperator::diagonal({0.7, 0.3}), 2);
    EXPECT_NEAR(sq.trace(), 0.58, 1e-15);
}

TEST(operator, mat_func_rejects_negative_with_support_only) {
    EXPECT_THROW(mat_log(HermitianOperator::diagonal({0.5, -0.5})), std::domain_error);
}

TEST(operator, mat_func_identity_reconstructs) {
    Rng rng(7);
    HermitianOperator h = random_hermitian(5, rng);
    HermitianOperator same = mat_func(h, [](double x) { return x; }, Support::kFull);
    EXPECT_LE(max_diff(same.matrix(), h.matrix()), 1e-12);
}

TEST(operator, threshold_projector_examples) {
    HermitianOperator p = threshold_projector(HermitianOperator::diagonal({3, 1}), 2 * HermitianOperator::identity(2));
    EXPECT_LE(max_diff(p.matrix(), HermitianOperator::diagonal({1, 0}).matrix()), 1e-15);

    Rng rng(13);
    DensityMatrix rho = random_state(4, 2, rng);
    HermitianOperator support = threshold_projector(rho.op(), HermitianOperator::zero(4));
    // {rho >= 0} includes the kernel because of the inclusive tie-break.
    EXPECT_LE(max_diff(support.matrix(), Matrix::Identity(4, 4)), 1e-12);
    HermitianOperator strict = support_projector(rho.op());
    EXPECT_NEAR(strict.trace(), 2, 1e-12);

    HermitianOperator k = random_psd(3, rng);
    EXPECT_LE(max_diff(threshold_projector(k, k).matrix(), Matrix::Identity(3, 3)), 1e-12);
}

TEST(operator, threshold_projector_positive_part_and_covariance) {
    Rng rng(17);
    for (int trial = 0; trial < 20; trial++) {
        HermitianOperator l = random_hermitian(5, rng);
        HermitianOperator k = random_hermitian(5, rng);
        HermitianOperator p = threshold_projector(l, k);
        EXPECT_GE(((l - k).matrix() * p.matrix()).trace().real(), -1e-9);
        EXPECT_LE((p.matrix() * p.matrix() - p.matrix()).norm(), 1e-9);

        Matrix v = random_unitary(5, rng);
        HermitianOperator rotated = threshold_projector(l.conjugated(v), k.conjugated(v));
        EXPECT_LE(max_diff(p.conjugated(v).matrix(), rotated.matrix()), 1e-9);
    }
}

TEST(operator, purify_examples) {
    Vector phi(2);
    phi << Complex(0.6, 0), Complex(0, 0.8);
    Purification pure = purify(BipartiteState(DensityMatrix::pure(phi), 2, 1));
    EXPECT_EQ(pure.dim_c, 1);
    EXPECT_NEAR(std::abs(phi.dot(pure.psi)), 1, 1e-12);

    Purification mixed = purify(BipartiteState(DensityMatrix::maximally_mixed(2), 2, 1));
    EXPECT_EQ(mixed.dim_c, 2);
    EXPECT_NEAR(std::abs(mixed.psi(0)), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(std::abs(mixed.psi(3)), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(std::abs(mixed.psi(1)) + std::abs(mixed.psi(2)), 0, 1e-12);

    Purification diag = purify(BipartiteState(DensityMatrix::diagonal({0.7, 0.3}), 2, 1));
    EXPECT_NEAR(std::abs(diag.psi(0)), std::sqrt(0.7), 1e-12);
    EXPECT_NEAR(std::abs(diag.psi(3)), std::sqrt(0.3), 1e-12);
    EXPECT_NEAR(std::abs(diag.psi(1)) + std::abs(diag.psi(2)), 0, 1e-12);
}

TEST(operator, purify_traces_back) {
    Rng rng(19);
    for (int trial = 0; trial < 5; trial++) {
        BipartiteState rho = random_bipartite(2, 3, rng);
        Purification p = purify(rho);
        const int dims[] = {p.dim_a, p.dim_b, p.dim_c};
        const int keep[] = {0, 1};
        HermitianOperator back = partial_trace(p.density().op(), dims, keep);
        EXPECT_LE((back.matrix() - rho.state().matrix()).norm(), 1e-9);

        BipartiteState ac = p.marginal_ac();
        const int keep_ac[] = {0, 2};
        EXPECT_LE((ac.state().matrix() - partial_trace(p.density().op(), dims, keep_ac).matrix()).norm(), 1e-12);
    }
}

TEST(operator, symmetrize_fixed_point_and_pair) {
    Rng rng(23);
    DensityMatrix s = random_state(2, rng);
    HermitianOperator inv = tensor_power(s.op(), 3);
    EXPECT_LE(max_diff(symmetrize(inv, 2, 3).matrix(), inv.matrix()), 1e-14);

    DensityMatrix r = random_state(2, rng);
    HermitianOperator expect = (tensor(r.op(), s.op()) + tensor(s.op(), r.op())) * 0.5;
    EXPECT_LE(max_diff(symmetrize(tensor(r.op(), s.op()), 2, 2).matrix(), expect.matrix()), 1e-14);
}

TEST(operator, symmetrize_matches_permutation_sum) {
    Rng rng(29);
    DensityMatrix m = random_state(8, rng);
    Matrix oracle = Matrix::Zero(8, 8);
    std::vector<int> perm = {0, 1, 2};
    do {
        Matrix u = permutation_unitary(2, perm);
        oracle += u * m.matrix() * u.adjoint();
    } while (std::next_permutation(perm.begin(), perm.end()));
    oracle /= 6.0;
    HermitianOperator sym = symmetrize(m.op(), 2, 3);
    EXPECT_LE(max_diff(sym.matrix(), oracle), 1e-14);
    EXPECT_NEAR(sym.trace(), 1, 1e-12);
    perm = {0, 1, 2};
    do {
        EXPECT_LE(commutator_norm(sym.matrix(), permutation_unitary(2, perm)), 1e-9);
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(operator, symmetrize_refuses_large_n) {
    EXPECT_THROW(symmetrize(HermitianOperator::identity(512), 2, 9), std::invalid_argument);
}

TEST(operator, permute_subsystems_matches_relabeling) {
    Rng rng(31);
    HermitianOperator m = random_hermitian(27, rng);
    const int dims[] = {3, 3, 3};
    std::vector<int> perm = {2, 0, 1};
    Matrix u = permutation_unitary(3, perm);
    EXPECT_LE(max_diff(permute_subsystems(m, dims, perm).matrix(), u * m.matrix() * u.adjoint()), 1e-14);
}

TEST(operator, trace_distance_basics) {
    EXPECT_NEAR(trace_distance(HermitianOperator::diagonal({1, 0}), HermitianOperator::diagonal({0, 1})), 1, 1e-15);
    EXPECT_NEAR(trace_distance(HermitianOperator::diagonal({0.7, 0.3}), HermitianOperator::diagonal({0.5, 0.5})), 0.2, 1e-15);
}
