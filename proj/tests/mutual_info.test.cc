#include "qrmi/mutual_info.h"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.h"
#include "qrmi/random.h"

using namespace qrmi;

namespace {

const double kLn2 = std::log(2.0);

BipartiteState bell() {
    Vector v = Vector::Zero(4);
    v(0) = v(3) = 1;
    return BipartiteState(DensityMatrix::pure(v), 2, 2);
}

BipartiteState correlated_bits() {
    return BipartiteState(DensityMatrix::diagonal({0.5, 0, 0, 0.5}), 2, 2);
}

HypothesisInstance random_instance(Rng &rng, int da = 2, int db = 2) {
    return HypothesisInstance::mutual_information(random_bipartite(da, db, rng));
}

HypothesisInstance random_tau_instance(Rng &rng) {
    return HypothesisInstance(random_bipartite(2, 2, rng), random_state(2, rng).op());
}

HypothesisInstance product_instance(Rng &rng) {
    DensityMatrix a = random_state(2, rng);
    DensityMatrix b = random_state(3, rng);
    return HypothesisInstance(BipartiteState(tensor(a, b), 2, 3), a.op());
}

double sandwiched_at(const HypothesisInstance &inst, const HermitianOperator &sigma, double alpha) {
    return divergence(DivergenceKind::kSandwiched, inst.rho().state(), inst.reference(sigma), alpha).value;
}

HypothesisInstance tensor_instance(const HypothesisInstance &x, const HypothesisInstance &y) {
    // (A1 B1) (A2 B2) -> (A1 A2)(B1 B2)
    HermitianOperator joint = tensor(x.rho().state().op(), y.rho().state().op());
    const int dims[] = {x.dim_a(), x.dim_b(), y.dim_a(), y.dim_b()};
    const int perm[] = {0, 2, 1, 3};
    HermitianOperator reordered = permute_subsystems(joint, dims, perm);
    return HypothesisInstance(BipartiteState(DensityMatrix(reordered), x.dim_a() * y.dim_a(), x.dim_b() * y.dim_b()), tensor(x.tau(), y.tau()));
}

}  // namespace

TEST(mutual_info, instance_validation) {
    EXPECT_THROW(HypothesisInstance(bell(), HermitianOperator::identity(3)), std::invalid_argument);
    EXPECT_THROW(HypothesisInstance(bell(), HermitianOperator::diagonal({1, 0})), std::invalid_argument);
    EXPECT_THROW(HypothesisInstance(bell(), HermitianOperator::diagonal({1, -0.5})), std::invalid_argument);
    EXPECT_NO_THROW(HypothesisInstance(bell(), HermitianOperator::diagonal({3, 1})));
}

TEST(mutual_info, sibson_examples) {
    Rng rng(1);
    HypothesisInstance prod = product_instance(rng);
    for (double a : {0.3, 0.7, 2.0}) {
        MIResult r = sibson_minimizer(prod, a);
        EXPECT_NEAR(r.value, 0, 1e-12);
        EXPECT_LE((r.minimizer.matrix() - prod.rho().marginal_b().matrix()).norm(), 1e-10);
    }

    MIResult b = sibson_minimizer(HypothesisInstance::mutual_information(bell()), 0.5);
    EXPECT_NEAR(b.value, 2 * kLn2, 1e-12);
    EXPECT_LE((b.minimizer.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm(), 1e-12);

    MIResult c = sibson_minimizer(HypothesisInstance(correlated_bits(), DensityMatrix::maximally_mixed(2).op()), 0.3);
    EXPECT_NEAR(c.value, kLn2, 1e-12);
    EXPECT_LE((c.minimizer.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm(), 1e-12);
}

TEST(mutual_info, sibson_minimizer_reproduces_value) {
    Rng rng(2);
    for (int trial = 0; trial < 10; trial++) {
        HypothesisInstance inst = random_tau_instance(rng);
        for (double a : {0.3, 0.6, 1.7, 3.0}) {
            MIResult r = sibson_minimizer(inst, a);
            double direct = divergence(DivergenceKind::kPetz, inst.rho().state(), inst.reference(r.minimizer.op()), a).value;
            EXPECT_NEAR(direct, r.value, 1e-9);
        }
    }
}

TEST(mutual_info, sibson_matches_bloch_search) {
    Rng rng(3);
    for (int trial = 0; trial < 3; trial++) {
        HypothesisInstance inst = random_instance(rng);
        for (double a : {0.3, 2.0}) {
            double grid = oracle::bloch_minimum(
                [&](const oracle::Bloch &r) {
                    return oracle::petz(inst.rho().state().matrix(), inst.reference(HermitianOperator(oracle::bloch_state(r))).matrix(), a);
                },
                25, 400);
            EXPECT_NEAR(sibson_minimizer(inst, a).value, grid, 1e-6);
        }
    }
}

TEST(mutual_info, petz_mi_examples) {
    HypothesisInstance b = HypothesisInstance::mutual_information(bell());
    for (double a : {0.25, 0.5, 0.75}) {
        EXPECT_NEAR(petz_mi(b, a).value, 2 * kLn2, 1e-12);
    }
    Rng rng(4);
    HypothesisInstance inst = random_tau_instance(rng);
    DivergenceValue d = divergence(DivergenceKind::kPetz, inst.rho().state(), inst.reference(inst.rho().marginal_b().op()), 1);
    EXPECT_DOUBLE_EQ(petz_mi(inst, 1).value, d.value);

    Vector a(2), c(2);
    a << 0.6, Complex(0, 0.8);
    c << 1, 0;
    DensityMatrix pa = DensityMatrix::pure(a);
    BipartiteState pure_product(tensor(pa, DensityMatrix::pure(c)), 2, 2);
    HypothesisInstance pp = HypothesisInstance::mutual_information(pure_product);
    for (double alpha : {0.0, 0.4, 1.0, 2.0}) {
        EXPECT_NEAR(petz_mi(pp, alpha).value, 0, 1e-12);
    }
}

TEST(mutual_info, petz_alpha_zero_is_limit) {
    Rng rng(5);
    for (int trial = 0; trial < 5; trial++) {
        // Rank-deficient rho so that I_0 is not trivially zero.
        BipartiteState rho(random_state(4, 2, rng), 2, 2);
        HypothesisInstance inst = HypothesisInstance::mutual_information(rho);
        double zero = petz_mi(inst, 0).value;
        double small = petz_mi(inst, 1e-5).value;
        EXPECT_NEAR(zero, small, 1e-4);
        EXPECT_LE(zero, petz_mi(inst, 0.1).value + 1e-12);
    }
}

TEST(mutual_info, fp_map_examples) {
    Rng rng(6);
    HypothesisInstance prod = product_instance(rng);
    auto [fixed, chi] = sandwiched_fp_map(prod, 0.7, prod.rho().marginal_b());
    EXPECT_LE((fixed.matrix() - prod.rho().marginal_b().matrix()).norm(), 1e-10);
    EXPECT_NEAR(std::log(chi) / (0.7 - 1), 0, 1e-12);

    HypothesisInstance b = HypothesisInstance::mutual_information(bell());
    auto [bx, bchi] = sandwiched_fp_map(b, 0.75, DensityMatrix::maximally_mixed(2));
    EXPECT_LE((bx.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm(), 1e-12);
    EXPECT_NEAR(std::log(bchi) / (0.75 - 1), 2 * kLn2, 1e-12);
}

TEST(mutual_info, fp_map_matches_independent_matrix_powers) {
    Rng rng(7);
    HypothesisInstance inst = random_tau_instance(rng);
    const double a = 0.7;
    const Matrix g = oracle::power(inst.reference(DensityMatrix::maximally_mixed(2).op()).matrix(), (1 - a) / (2 * a));
    Matrix y = g * inst.rho().state().matrix() * g;
    y = (y + y.adjoint()) / 2;
    const Matrix ya = oracle::power(y, a);
    const double chi = ya.trace().real();
    const int dims[] = {2, 2};
    const int keep[] = {1};
    Matrix x = partial_trace_matrix(ya, dims, keep) / chi;

    auto [mx, mchi] = sandwiched_fp_map(inst, a, DensityMatrix::maximally_mixed(2));
    EXPECT_NEAR(mchi, chi, 1e-12);
    EXPECT_LE((mx.matrix() - x).cwiseAbs().maxCoeff(), 1e-12);
    // Frozen from the Schur-Pade oracle above.
    EXPECT_NEAR(mchi, 0.8866201591711822, 1e-12);
}

TEST(mutual_info, fp_map_rejects_rank_collapse) {
    HypothesisInstance b = HypothesisInstance::mutual_information(bell());
    EXPECT_THROW(sandwiched_fp_map(b, 0.75, DensityMatrix::diagonal({1, 0})), std::runtime_error);
    EXPECT_THROW(sandwiched_fp_map(b, 1.0, DensityMatrix::maximally_mixed(2)), std::invalid_argument);
}

TEST(mutual_info, sandwiched_examples) {
    Rng rng(8);
    HypothesisInstance prod = product_instance(rng);
    for (double a : {0.5, 0.7, 1.0, 2.0, 5.0}) {
        EXPECT_NEAR(sandwiched_mi(prod, a).value, 0, 1e-9) << a;
    }
    HypothesisInstance inst = random_tau_instance(rng);
    EXPECT_DOUBLE_EQ(sandwiched_mi(inst, 1).value, petz_mi(inst, 1).value);

    // Bell state against every sigma_B on a Bloch grid, refined.
    HypothesisInstance b = HypothesisInstance::mutual_information(bell());
    double grid = oracle::bloch_minimum(
        [&](const oracle::Bloch &r) {
            return oracle::sandwiched(b.rho().state().matrix() + 0 * Matrix::Identity(4, 4), b.reference(HermitianOperator(oracle::bloch_state(r))).matrix(), 2);
        },
        25, 400);
    EXPECT_NEAR(grid, 2 * kLn2, 1e-6);
    MIResult r = sandwiched_mi(b, 2);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 2 * kLn2, 1e-9);
}

TEST(mutual_info, sandwiched_minimizer_reproduces_value) {
    Rng rng(9);
    for (int trial = 0; trial < 10; trial++) {
        HypothesisInstance inst = random_tau_instance(rng);
        for (double a : {0.5, 0.6, 0.8, 1.5, 2.0, 3.0}) {
            MIResult r = sandwiched_mi(inst, a);
            ASSERT_TRUE(r.converged) << a;
            EXPECT_NEAR(sandwiched_at(inst, r.minimizer.op(), a), r.value, 1e-9) << a;
        }
    }
}

TEST(mutual_info, duality_and_direct_agree) {
    Rng rng(10);
    for (int trial = 0; trial < 10; trial++) {
        HypothesisInstance inst = trial % 2 ? random_instance(rng) : random_tau_instance(rng);
        for (double a : {0.5, 0.6, 0.8, 1.5, 2.0, 3.0}) {
            MIResult s = sandwiched_mi(inst, a);
            MIResult d = dual_mi(inst, a);
            MIResult m = direct_minimization(inst, DivergenceKind::kSandwiched, a);
            EXPECT_TRUE(d.converged) << a;
            EXPECT_NEAR(s.value, d.value, 1e-7) << a;
            EXPECT_NEAR(s.value, m.value, 1e-6) << a;
        }
    }
}

TEST(mutual_info, dual_examples) {
    Rng rng(11);
    HypothesisInstance inst = random_tau_instance(rng);
    EXPECT_DOUBLE_EQ(dual_mi(inst, 1).value, mi_variance(inst).d);
    HypothesisInstance prod = product_instance(rng);
    for (double a : {0.6, 2.0}) {
        EXPECT_NEAR(dual_mi(prod, a).value, 0, 1e-9);
    }
}

TEST(mutual_info, alpha_infinity) {
    HypothesisInstance cb(correlated_bits(), DensityMatrix::maximally_mixed(2).op());
    EXPECT_NEAR(sandwiched_mi(cb, AlphaParam::infinity()).value, kLn2, 1e-9);
    Rng rng(12);
    for (int trial = 0; trial < 5; trial++) {
        HypothesisInstance inst = random_tau_instance(rng);
        MIResult inf = sandwiched_mi(inst, AlphaParam::infinity());
        EXPECT_TRUE(inf.converged);
        EXPECT_GE(inf.value, sandwiched_mi(inst, 20).value - 1e-9);
        // D~_inf at any state upper-bounds the minimum.
        EXPECT_NEAR(inf.value, sandwiched_at(inst, inf.minimizer.op(), INFINITY), 1e-9);
    }

    // Commuting inputs: min_q max_ab p(a,b) / (t(a) q(b)) = sum_b max_a p(a,b) / t(a).
    std::uniform_real_distribution<double> unit(0.05, 1);
    for (int trial = 0; trial < 5; trial++) {
        const int da = 2 + trial % 2;
        const int db = 3 - trial % 2;
        RealVector p(da * db);
        RealVector t(da);
        for (double &x : p) {
            x = unit(rng);
        }
        for (double &x : t) {
            x = unit(rng);
        }
        p /= p.sum();
        HypothesisInstance inst(BipartiteState(DensityMatrix(HermitianOperator::diagonal(p)), da, db), HermitianOperator::diagonal(t));
        double sum = 0;
        for (int b = 0; b < db; b++) {
            double top = 0;
            for (int a = 0; a < da; a++) {
                top = std::max(top, p(a * db + b) / t(a));
            }
            sum += top;
        }
        MIResult inf = sandwiched_mi(inst, AlphaParam::infinity());
        EXPECT_TRUE(inf.converged);
        EXPECT_NEAR(inf.value, std::log(sum), 1e-9);
    }
}

TEST(mutual_info, large_orders_are_certified) {
    Rng rng(21);
    for (int trial = 0; trial < 6; trial++) {
        HypothesisInstance inst = trial % 2 ? random_instance(rng, 3, 2) : random_tau_instance(rng);
        double previous = 0;
        for (double a : {5.0, 20.0, 60.0}) {
            MIResult s = sandwiched_mi(inst, a);
            EXPECT_TRUE(s.converged) << a;
            EXPECT_NEAR(s.value, sandwiched_at(inst, s.minimizer.op(), a), 1e-9) << a;
            EXPECT_GE(s.value, previous - 1e-9) << a;
            previous = s.value;
            // A dual answer is only reported as converged when it is right.
            MIResult d = dual_mi(inst, a);
            if (d.converged) {
                EXPECT_NEAR(d.value, s.value, 1e-8) << a;
            } else {
                EXPECT_LE(d.value, s.value + 1e-9) << a;
            }
        }
        EXPECT_LE(previous, sandwiched_mi(inst, AlphaParam::infinity()).value + 1e-9);
    }
}

TEST(mutual_info, fixed_point_unique) {
    Rng rng(13);
    for (int trial = 0; trial < 5; trial++) {
        HypothesisInstance inst = random_instance(rng, 2, 3);
        const double a = 0.6 + 0.3 * trial / 4;
        MIResult ref = sandwiched_mi(inst, a);
        for (int start = 0; start < 20; start++) {
            DensityMatrix sigma = random_state(3, rng);
            for (int it = 0; it < 20000; it++) {
                auto [next, chi] = sandwiched_fp_map(inst, a, sigma);
                double step = trace_distance(next.op(), sigma.op());
                sigma = next;
                if (step < 1e-12) {
                    break;
                }
            }
            EXPECT_LE(trace_distance(sigma.op(), ref.minimizer.op()), 1e-7);
        }
    }
}

TEST(mutual_info, mi_variance_examples) {
    Rng rng(14);
    EXPECT_NEAR(mi_variance(product_instance(rng)).v, 0, 1e-12);
    EXPECT_NEAR(mi_variance(HypothesisInstance::mutual_information(bell())).v, 0, 1e-12);

    const double p[] = {0.4, 0.1, 0.1, 0.4};
    double d = 0;
    for (double x : p) {
        d += x * std::log(x / 0.25);
    }
    double v = 0;
    for (double x : p) {
        v += x * std::pow(std::log(x / 0.25) - d, 2);
    }
    BipartiteState classical(DensityMatrix::diagonal({0.4, 0.1, 0.1, 0.4}), 2, 2);
    RelativeEntropyVariance dv = mi_variance(HypothesisInstance::mutual_information(classical));
    EXPECT_NEAR(dv.d, d, 1e-12);
    EXPECT_NEAR(dv.v, v, 1e-12);
    EXPECT_NEAR(dv.v, 0.30748992890764887, 1e-12);
}

TEST(mutual_info, specializations) {
    Rng rng(15);
    DensityMatrix b = random_state(3, rng);
    BipartiteState mixed(tensor(DensityMatrix::maximally_mixed(2), b), 2, 3);
    for (double a : {0.5, 0.8, 1.0, 2.0}) {
        EXPECT_NEAR(specialize(InformationKind::kConditionalUp, mixed, a, DivergenceKind::kPetz), kLn2, 1e-9);
        EXPECT_NEAR(specialize(InformationKind::kConditionalUp, mixed, a, DivergenceKind::kSandwiched), kLn2, 1e-9);
    }
    EXPECT_NEAR(specialize(InformationKind::kMutualInfo, bell(), 1, DivergenceKind::kSandwiched), 2 * kLn2, 1e-12);
    EXPECT_NEAR(specialize(InformationKind::kConditionalUp, bell(), 1, DivergenceKind::kSandwiched), -kLn2, 1e-12);

    BipartiteState rho = random_bipartite(2, 2, rng);
    HypothesisInstance mixed_tau(rho, DensityMatrix::maximally_mixed(2).op());
    for (double a : {0.7, 1.5}) {
        EXPECT_NEAR(specialize(InformationKind::kConditionalUp, rho, a, DivergenceKind::kSandwiched),
                    kLn2 - sandwiched_mi(mixed_tau, a).value, 1e-9);
    }
}

TEST(mutual_info, additivity) {
    Rng rng(16);
    for (int trial = 0; trial < 3; trial++) {
        HypothesisInstance x = random_tau_instance(rng);
        HypothesisInstance y = random_tau_instance(rng);
        HypothesisInstance xy = tensor_instance(x, y);
        for (double a : {0.5, 0.75, 1.5, 3.0}) {
            EXPECT_NEAR(petz_mi(xy, a).value, petz_mi(x, a).value + petz_mi(y, a).value, 1e-8) << a;
            EXPECT_NEAR(sandwiched_mi(xy, a).value, sandwiched_mi(x, a).value + sandwiched_mi(y, a).value, 1e-8) << a;
        }
    }
}

TEST(mutual_info, ordering_monotonicity_convexity) {
    Rng rng(17);
    const std::vector<double> grid = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0, 2.5, 3.0};
    for (int trial = 0; trial < 5; trial++) {
        HypothesisInstance inst = random_tau_instance(rng);
        std::vector<double> values;
        for (double a : grid) {
            double s = sandwiched_mi(inst, a).value;
            EXPECT_LE(s, petz_mi(inst, a).value + 1e-9) << a;
            if (!values.empty()) {
                EXPECT_GE(s, values.back() - 1e-9) << a;
            }
            values.push_back(s);
        }
        // t -> t I~_{1+t} on an evenly spaced t grid.
        std::vector<double> ts = {-0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
        std::vector<double> f;
        for (double t : ts) {
            f.push_back(t * sandwiched_mi(inst, 1 + t).value);
        }
        for (size_t i = 1; i + 1 < f.size(); i++) {
            EXPECT_LE(f[i], (f[i - 1] + f[i + 1]) / 2 + 1e-9);
        }
    }
}

TEST(mutual_info, derivative_at_one) {
    Rng rng(18);
    for (int trial = 0; trial < 10; trial++) {
        HypothesisInstance inst = random_tau_instance(rng);
        const double h = 1e-3;
        double slope = (sandwiched_mi(inst, 1 + h).value - sandwiched_mi(inst, 1 - h).value) / (2 * h);
        EXPECT_NEAR(slope, mi_variance(inst).v / 2, 1e-4);
    }
}

TEST(mutual_info, validation_mode_cross_checks) {
    Rng rng(19);
    HypothesisInstance inst = random_tau_instance(rng);
    MIOptions options;
    options.validate = true;
    EXPECT_TRUE(sandwiched_mi(inst, 0.8, options).converged);
    EXPECT_TRUE(sandwiched_mi(inst, 2.0, options).converged);
}
