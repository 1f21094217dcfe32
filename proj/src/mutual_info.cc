#include "qrmi/mutual_info.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qrmi/random.h"

namespace qrmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSingularCutoff = 1e-13;
constexpr double kStepTolerance = 1e-10;
constexpr double kChiTolerance = 1e-12;
// Relative slack when comparing chi before and after a damped step.
constexpr double kChiSlack = 1e-14;
constexpr double kMinDamping = 1e-10;
constexpr int kAndersonDepth = 5;
// Weight of the maximally mixed state blended into the best response so that
// it stays full rank.
constexpr double kResponseMixing = 1e-12;
// Accept the dual value when the primal best response matches it this closely.
constexpr double kBracketTolerance = 1e-9;
// Target for log(primal / dual) on the alpha = infinity barrier path.
constexpr double kBarrierGap = 1e-12;
// Iteration cap for the dual fixed point when it only warm-starts the primal.
constexpr int kDualWarmStart = 500;
constexpr int kPolishRounds = 8;
constexpr int kNewtonSteps = 8;
// Accepted Frank-Wolfe bound on the suboptimality of a polished minimizer. The
// bound is loose near the boundary; observed errors are far smaller.
constexpr double kCertificateTolerance = 1e-8;

const int kKeepB[] = {1};

MIResult relative_entropy_point(const HypothesisInstance &inst, double alpha) {
    RelativeEntropyVariance dv = mi_variance(inst);
    MIResult r;
    r.minimizer = inst.rho().marginal_b();
    r.method = MIMethod::kSibsonClosedForm;
    if (dv.support_violation) {
        r.value = kInf;
        r.support_violation = true;
        return r;
    }
    r.value = dv.d + (alpha - 1) * dv.v / 2;
    return r;
}

// Data shared by every evaluation of X_alpha on one instance.
struct FixedPointProblem {
    Matrix rho_half;
    Spectrum tau;
    HermitianOperator rho_b;
    int dim_a = 0;
    int dim_b = 0;
    double alpha = 0;

    FixedPointProblem(const HypothesisInstance &inst, double a)
        : rho_half(mat_power(inst.rho().state().op(), 0.5).matrix()),
          tau(inst.tau().spectrum()),
          rho_b(inst.rho().marginal_b().op()),
          dim_a(inst.dim_a()),
          dim_b(inst.dim_b()),
          alpha(a) {
    }
};

struct Evaluation {
    HermitianOperator x;  // tr_A[Y^alpha], unnormalized
    double chi = 0;
};

Evaluation evaluate(const FixedPointProblem &p, const HermitianOperator &sigma) {
    Spectrum ss = sigma.spectrum();
    // Only negative powers of sigma (alpha > 1) need supp(rho_B) covered.
    if (p.alpha > 1 && !support_contained(p.rho_b, ss)) {
        throw std::runtime_error("fixed-point map: sigma lost rank on supp(rho_B); reseed from the maximally mixed state");
    }
    const double gamma = (1 - p.alpha) / p.alpha;
    const Matrix g = kron(mat_power(p.tau, gamma / 2).matrix(), mat_power(ss, gamma / 2).matrix());
    Eigen::BDCSVD<Matrix> svd(g * p.rho_half, Eigen::ComputeThinU);
    const RealVector &s = svd.singularValues();
    const double cutoff = kSingularCutoff * (s.size() ? s.maxCoeff() : 0.0);
    RealVector w = RealVector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); i++) {
        if (s(i) > cutoff) {
            w(i) = std::pow(s(i), 2 * p.alpha);
        }
    }
    const Matrix &u = svd.matrixU();
    const Matrix y_alpha = u * w.cast<Complex>().asDiagonal() * u.adjoint();
    const int dims[] = {p.dim_a, p.dim_b};
    return {HermitianOperator(partial_trace_matrix(y_alpha, dims, kKeepB)), w.sum()};
}

struct FixedPointOutcome {
    HermitianOperator sigma;
    double chi = 0;
    int iterations = 0;
    bool converged = false;
};

RealVector flatten(const Matrix &m) {
    RealVector v(2 * m.size());
    for (Eigen::Index i = 0; i < m.size(); i++) {
        v(2 * i) = m.data()[i].real();
        v(2 * i + 1) = m.data()[i].imag();
    }
    return v;
}

Matrix unflatten(const RealVector &v, int dim) {
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); i++) {
        m.data()[i] = Complex(v(2 * i), v(2 * i + 1));
    }
    return m;
}

// Anderson mixing over the last few residuals of the plain map.
class AndersonMixer {
   public:
    explicit AndersonMixer(int depth) : depth_(depth) {
    }

    void reset() {
        dx_.clear();
        df_.clear();
        has_last_ = false;
    }

    // Records (x, f = g(x) - x) and returns the extrapolated point, or nothing
    // while the history is empty.
    std::optional<RealVector> propose(const RealVector &x, const RealVector &f) {
        if (has_last_) {
            dx_.push_back(x - last_x_);
            df_.push_back(f - last_f_);
            if (static_cast<int>(dx_.size()) > depth_) {
                dx_.erase(dx_.begin());
                df_.erase(df_.begin());
            }
        }
        last_x_ = x;
        last_f_ = f;
        has_last_ = true;
        if (dx_.empty() || depth_ == 0) {
            return std::nullopt;
        }
        const int m = static_cast<int>(dx_.size());
        Eigen::MatrixXd dfm(f.size(), m);
        Eigen::MatrixXd dxm(f.size(), m);
        for (int j = 0; j < m; j++) {
            dfm.col(j) = df_[j];
            dxm.col(j) = dx_[j];
        }
        RealVector gamma = dfm.completeOrthogonalDecomposition().solve(f);
        if (!gamma.allFinite()) {
            return std::nullopt;
        }
        return RealVector(x + f - (dxm + dfm) * gamma);
    }

   private:
    int depth_;
    std::vector<RealVector> dx_;
    std::vector<RealVector> df_;
    RealVector last_x_;
    RealVector last_f_;
    bool has_last_ = false;
};

bool improves(bool maximize, double candidate, double current) {
    return maximize ? candidate >= current * (1 - kChiSlack) : candidate <= current * (1 + kChiSlack);
}

// Damped iteration sigma <- (1 - eta) sigma + eta X(sigma). chi must increase
// for alpha < 1 and decrease for alpha > 1; eta halves whenever it does not.
// An Anderson-extrapolated point replaces the damped step when it is a valid
// state and improves chi at least as much.
FixedPointOutcome iterate(const FixedPointProblem &p, HermitianOperator sigma, int max_iterations) {
    const bool maximize = p.alpha < 1;
    const int dim = sigma.dim();
    Evaluation ev = evaluate(p, sigma);
    AndersonMixer mixer(kAndersonDepth);
    double eta = 1;
    double last_change = kInf;
    for (int it = 0; it < max_iterations; it++) {
        HermitianOperator target = ev.x * (1 / ev.chi);
        if (trace_distance(target, sigma) < kStepTolerance && last_change < kChiTolerance) {
            return {sigma, ev.chi, it, true};
        }
        HermitianOperator candidate;
        Evaluation next;
        while (true) {
            candidate = sigma * (1 - eta) + target * eta;
            try {
                next = evaluate(p, candidate);
                if (improves(maximize, next.chi, ev.chi)) {
                    break;
                }
            } catch (const std::runtime_error &) {
                // Rank loss along the step counts as a failed step.
            }
            eta /= 2;
            mixer.reset();
            if (eta < kMinDamping) {
                return {sigma, ev.chi, it, false};
            }
        }
        const RealVector x = flatten(sigma.matrix());
        if (auto extrapolated = mixer.propose(x, flatten(target.matrix()) - x)) {
            HermitianOperator jump(unflatten(*extrapolated, dim));
            if (jump.matrix().allFinite() && std::abs(jump.trace() - 1) < 1e-9 && min_eigenvalue(jump) > 0) {
                try {
                    Evaluation at_jump = evaluate(p, jump);
                    if (improves(maximize, at_jump.chi, next.chi)) {
                        candidate = jump * (1 / jump.trace());
                        next = evaluate(p, candidate);
                    }
                } catch (const std::runtime_error &) {
                    mixer.reset();
                }
            }
        }
        last_change = std::abs(next.chi - ev.chi) / ev.chi;
        sigma = candidate;
        ev = next;
    }
    return {sigma, ev.chi, max_iterations, false};
}

FixedPointOutcome solve(const HypothesisInstance &inst, double alpha, int max_iterations) {
    FixedPointProblem p(inst, alpha);
    try {
        return iterate(p, p.rho_b, max_iterations);
    } catch (const std::runtime_error &) {
        return iterate(p, DensityMatrix::maximally_mixed(inst.dim_b()).op(), max_iterations);
    }
}

MIResult fixed_point_result(const HypothesisInstance &inst, double alpha, int max_iterations) {
    FixedPointOutcome out = solve(inst, alpha, max_iterations);
    MIResult r;
    r.minimizer = DensityMatrix::normalized(out.sigma);
    r.value = std::log(out.chi) / (alpha - 1);
    r.iterations = out.iterations;
    r.converged = out.converged;
    r.method = MIMethod::kFixedPoint;
    return r;
}

struct DualSolution {
    Purification psi;
    double beta = 0;
    FixedPointOutcome outcome;
};

// Fixed point of the AC problem rho_AC against tau^-1 (x) sigma_C at order beta.
DualSolution solve_dual(const HypothesisInstance &inst, double beta, int max_iterations) {
    DualSolution d;
    d.psi = purify(inst.rho());
    d.beta = beta;
    HypothesisInstance ac(d.psi.marginal_ac(), support_inverse(inst.tau()));
    d.outcome = solve(ac, beta, max_iterations);
    return d;
}

// Holder best response to the AC optimum: sigma_B proportional to V^beta with
// V = tr_AC[(g (x) 1_B) psi psi^dagger (g (x) 1_B)], g = tau^(-gamma/2) (x) sigma_C^(gamma/2),
// gamma = (1 - beta) / beta. tr V^beta equals the AC objective at sigma_C.
DensityMatrix best_response(const HypothesisInstance &inst, const DualSolution &d) {
    const double gamma = (1 - d.beta) / d.beta;
    const int da = d.psi.dim_a;
    const int db = d.psi.dim_b;
    const int dc = d.psi.dim_c;
    const Matrix ga = mat_power(inst.tau(), -gamma / 2).matrix();
    const Matrix gc = mat_power(d.outcome.sigma, gamma / 2).matrix();
    // Rows index B, columns index (A, C).
    Matrix psi_b(db, da * dc);
    for (int a = 0; a < da; a++) {
        for (int b = 0; b < db; b++) {
            for (int c = 0; c < dc; c++) {
                psi_b(b, a * dc + c) = d.psi.psi((static_cast<Eigen::Index>(a) * db + b) * dc + c);
            }
        }
    }
    const Matrix phi = psi_b * kron(ga, gc).transpose();
    HermitianOperator v(Matrix(phi * phi.adjoint()));
    return DensityMatrix::normalized(mat_power(v, d.beta));
}

double dual_order(AlphaParam alpha) {
    return alpha.is_infinite() ? 0.5 : alpha.value / (2 * alpha.value - 1);
}

void cross_check(MIResult &r, const HypothesisInstance &inst, AlphaParam alpha, const MIOptions &options) {
    if (!options.validate || alpha.is_infinite()) {
        return;
    }
    MIResult direct = direct_minimization(inst, DivergenceKind::kSandwiched, alpha, options.direct);
    if (std::abs(direct.value - r.value) > options.validate_tolerance) {
        r.converged = false;
    }
}

// Real parameters of a lower-triangular factor L with sigma = L L^dagger / tr(L L^dagger).
class CholeskyChart {
   public:
    explicit CholeskyChart(int dim) : dim_(dim) {
    }

    int size() const {
        return dim_ * dim_;
    }

    Matrix factor(const RealVector &x) const {
        Matrix l = Matrix::Zero(dim_, dim_);
        int k = 0;
        for (int i = 0; i < dim_; i++) {
            l(i, i) = x(k++);
            for (int j = 0; j < i; j++) {
                l(i, j) = Complex(x(k), x(k + 1));
                k += 2;
            }
        }
        return l;
    }

    HermitianOperator state(const RealVector &x) const {
        const Matrix l = factor(x);
        Matrix s = l * l.adjoint();
        return HermitianOperator(Matrix(s / s.trace().real()));
    }

    RealVector coordinates(const Matrix &l) const {
        RealVector x(size());
        int k = 0;
        for (int i = 0; i < dim_; i++) {
            x(k++) = l(i, i).real();
            for (int j = 0; j < i; j++) {
                x(k++) = l(i, j).real();
                x(k++) = l(i, j).imag();
            }
        }
        return x;
    }

    RealVector coordinates_of_state(const HermitianOperator &sigma) const {
        Matrix regular = sigma.matrix() + 1e-6 * Matrix::Identity(dim_, dim_);
        Eigen::LLT<Matrix> llt(regular);
        return coordinates(llt.matrixL());
    }

   private:
    int dim_;
};

struct Minimum {
    RealVector x;
    double f = kInf;
    int iterations = 0;
    double gradient_norm = kInf;
};

template <typename F>
RealVector gradient(const F &f, const RealVector &x) {
    RealVector g(x.size());
    RealVector probe = x;
    for (Eigen::Index i = 0; i < x.size(); i++) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        g(i) = (up - down) / (2 * h);
    }
    return g;
}

// BFGS with Armijo backtracking; grad(x) returns the gradient of f at x.
template <typename F, typename G>
Minimum bfgs(const F &f, const G &grad, RealVector x, int max_iterations, double gradient_tolerance) {
    const Eigen::Index n = x.size();
    double fx = f(x);
    RealVector g = grad(x);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    int it = 0;
    int stalls = 0;
    for (; it < max_iterations; it++) {
        if (!std::isfinite(fx) || !g.allFinite() || g.norm() < gradient_tolerance) {
            break;
        }
        RealVector dir = -h * g;
        if (g.dot(dir) >= 0) {
            h.setIdentity();
            dir = -g;
        }
        double t = 1;
        RealVector next;
        double fnext = kInf;
        RealVector gnext;
        bool accepted = false;
        while (t > 1e-14) {
            next = x + t * dir;
            fnext = f(next);
            if (fnext <= fx + 1e-4 * t * g.dot(dir)) {
                accepted = true;
                break;
            }
            // Below roundoff in f the full step is judged by the gradient alone.
            if (t == 1 && std::abs(fnext - fx) <= 1e-14 * (1 + std::abs(fx))) {
                gnext = grad(next);
                if (gnext.allFinite() && gnext.norm() < g.norm()) {
                    accepted = true;
                    break;
                }
                gnext.resize(0);
            }
            t /= 2;
        }
        if (!accepted) {
            break;
        }
        if (gnext.size() == 0) {
            gnext = grad(next);
        }
        RealVector s = next - x;
        RealVector y = gnext - g;
        const double sy = s.dot(y);
        if (sy > 1e-16) {
            const double rho = 1 / sy;
            Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        stalls = fx - fnext < 1e-15 * (1 + std::abs(fx)) && gnext.norm() >= g.norm() / 2 ? stalls + 1 : 0;
        x = next;
        fx = fnext;
        g = gnext;
        if (stalls >= 3) {
            break;
        }
    }
    return {x, fx, it, g.norm()};
}

// Real coordinates of Hermitian d x d matrices: diagonal entries, then the
// real and imaginary parts of each upper off-diagonal pair.
std::vector<Matrix> hermitian_basis(int d) {
    std::vector<Matrix> basis;
    for (int i = 0; i < d; i++) {
        Matrix e = Matrix::Zero(d, d);
        e(i, i) = 1;
        basis.push_back(e);
    }
    for (int i = 0; i < d; i++) {
        for (int j = i + 1; j < d; j++) {
            Matrix re = Matrix::Zero(d, d);
            re(i, j) = re(j, i) = 1;
            basis.push_back(re);
            Matrix im = Matrix::Zero(d, d);
            im(i, j) = Complex(0, 1);
            im(j, i) = Complex(0, -1);
            basis.push_back(im);
        }
    }
    return basis;
}

struct MaxOrderSolution {
    double value = 0;
    HermitianOperator s;
    int iterations = 0;
    bool converged = true;
};

// alpha = infinity: I = log min{tr S : rho <= tau (x) S}. With
// R = (tau^-1/2 (x) 1) rho (tau^-1/2 (x) 1) the constraint is R <= 1 (x) S.
// Log-det barrier path followed by damped Newton steps; the barrier gap
// t * dim(AB) bounds the error in tr S.
MaxOrderSolution solve_max_order(const HypothesisInstance &inst) {
    const int da = inst.dim_a();
    const int db = inst.dim_b();
    const int n = da * db;
    const Matrix ta = kron(mat_power(inst.tau(), -0.5).matrix(), Matrix::Identity(db, db));
    const Matrix r = ta * inst.rho().state().op().matrix() * ta;
    const std::vector<Matrix> basis = hermitian_basis(db);
    const int k = static_cast<int>(basis.size());
    const Matrix id_a = Matrix::Identity(da, da);
    std::vector<Matrix> lifted;
    for (const Matrix &e : basis) {
        lifted.push_back(kron(id_a, e));
    }
    const int dims[] = {da, db};

    Matrix s = (HermitianOperator(r).spectrum().max() + 1) * Matrix::Identity(db, db);
    // phi_t(S) = tr S - t log det(1 (x) S - R), or +inf outside the domain.
    auto barrier = [&](const Matrix &sm, double t) {
        Eigen::LLT<Matrix> llt(Matrix(kron(id_a, sm) - r));
        if (llt.info() != Eigen::Success) {
            return kInf;
        }
        const RealVector diag = llt.matrixL().toDenseMatrix().diagonal().real();
        if ((diag.array() <= 0).any()) {
            return kInf;
        }
        return sm.trace().real() - 2 * t * diag.array().log().sum();
    };
    // Z = t M^-1 rescaled to tr_A Z = 1_B is dual feasible, so tr[Z R] <= tr S*.
    auto dual_bound = [&](const Matrix &sm, double t) {
        const Matrix minv = Matrix(kron(id_a, sm) - r).llt().solve(Matrix::Identity(n, n));
        const HermitianOperator zb(Matrix(t * partial_trace_matrix(minv, dims, kKeepB)));
        const Matrix lift = kron(id_a, mat_power(zb, -0.5).matrix());
        return (lift * (t * minv) * lift * r).trace().real();
    };
    MaxOrderSolution out;
    double t = std::max(1.0, s.trace().real());
    double gap = kInf;
    Matrix best = s;
    while (true) {
        for (int step = 0; step < 100; step++) {
            out.iterations++;
            const Matrix m = kron(id_a, s) - r;
            const Matrix minv = m.llt().solve(Matrix::Identity(n, n));
            const Matrix minv_b = partial_trace_matrix(minv, dims, kKeepB);
            RealVector g(k);
            std::vector<Matrix> q(k);
            for (int i = 0; i < k; i++) {
                g(i) = basis[i].trace().real() - t * (minv_b * basis[i]).trace().real();
                q[i] = minv * lifted[i];
            }
            Eigen::MatrixXd h(k, k);
            for (int i = 0; i < k; i++) {
                for (int j = i; j < k; j++) {
                    h(i, j) = h(j, i) = t * (q[i].transpose().cwiseProduct(q[j])).sum().real();
                }
            }
            const RealVector dx = -h.ldlt().solve(g);
            const double decrement = -g.dot(dx);
            if (!(decrement > 1e-20 * (1 + s.trace().real()))) {
                break;
            }
            Matrix ds = Matrix::Zero(db, db);
            for (int i = 0; i < k; i++) {
                ds += dx(i) * basis[i];
            }
            const double phi = barrier(s, t);
            double eta = 1;
            while (eta > 1e-12 && !(barrier(s + eta * ds, t) <= phi - 0.25 * eta * decrement)) {
                eta /= 2;
            }
            if (eta <= 1e-12) {
                break;
            }
            s += eta * ds;
            s = (s + s.adjoint()) / 2;
        }
        // Once roundoff dominates the certified gap grows again; keep the best point.
        const double g = std::log(s.trace().real() / dual_bound(s, t));
        if (g < gap) {
            gap = g;
            best = s;
        }
        if (gap <= kBarrierGap || g > 8 * gap || t * n <= 1e-16 * s.trace().real()) {
            break;
        }
        t /= 8;
    }
    out.s = HermitianOperator(best);
    out.value = std::log(best.trace().real());
    out.converged = gap <= kBracketTolerance;
    return out;
}

// log Q~_alpha(rho || tau (x) sigma) and its gradient in sigma for alpha > 1
// and full-rank sigma.
struct SandwichedObjective {
    Matrix rho_half;
    Matrix tau_gamma_half;
    Matrix tau_gamma;
    int dim_a = 0;
    int dim_b = 0;
    double alpha = 0;
    double gamma = 0;

    SandwichedObjective(const HypothesisInstance &inst, double a)
        : rho_half(mat_power(inst.rho().state().op(), 0.5).matrix()),
          tau_gamma_half(mat_power(inst.tau(), (1 - a) / (2 * a)).matrix()),
          tau_gamma(mat_power(inst.tau(), (1 - a) / a).matrix()),
          dim_a(inst.dim_a()),
          dim_b(inst.dim_b()),
          alpha(a),
          gamma((1 - a) / a) {
    }

    // Returns log Q, writing d(log Q)/d(sigma) into grad when requested.
    double operator()(const HermitianOperator &sigma, Matrix *grad) const {
        const Spectrum ss = sigma.spectrum();
        if (!(ss.min() > 0)) {
            return kInf;
        }
        const Matrix &u = ss.eigenvectors;
        const RealVector &lam = ss.eigenvalues;
        const Matrix sigma_half = u * lam.array().pow(gamma / 2).matrix().cast<Complex>().asDiagonal() * u.adjoint();
        Eigen::BDCSVD<Matrix> svd(kron(tau_gamma_half, sigma_half) * rho_half, grad ? Eigen::ComputeThinV : 0);
        const RealVector &sv = svd.singularValues();
        const double cutoff = kSingularCutoff * (sv.size() ? sv.maxCoeff() : 0.0);
        if (!(cutoff > 0)) {
            return kInf;
        }
        // Q = smax^(2 alpha) q with q computed on s / smax to avoid overflow.
        const double smax = sv.maxCoeff();
        double q = 0;
        RealVector w = RealVector::Zero(sv.size());
        for (Eigen::Index i = 0; i < sv.size(); i++) {
            if (sv(i) > cutoff) {
                q += std::pow(sv(i) / smax, 2 * alpha);
                w(i) = std::pow(sv(i) / smax, 2 * alpha - 2) / (smax * smax);
            }
        }
        if (grad) {
            const Matrix &v = svd.matrixV();
            const Matrix wm = rho_half * v * w.cast<Complex>().asDiagonal() * v.adjoint() * rho_half;
            const Matrix lift = kron(tau_gamma, Matrix::Identity(dim_b, dim_b));
            const int dims[] = {dim_a, dim_b};
            const Matrix wb = partial_trace_matrix(lift * wm, dims, kKeepB);
            // Frechet derivative of x^gamma in the eigenbasis of sigma.
            Matrix inner = u.adjoint() * wb * u;
            for (int i = 0; i < sigma.dim(); i++) {
                for (int j = 0; j < sigma.dim(); j++) {
                    const double a = lam(i);
                    const double b = lam(j);
                    const double dd = std::abs(a - b) > 1e-9 * std::max(a, b) ? (std::pow(a, gamma) - std::pow(b, gamma)) / (a - b)
                                                                              : gamma * std::pow((a + b) / 2, gamma - 1);
                    inner(i, j) *= dd;
                }
            }
            *grad = alpha * u * inner * u.adjoint() / q;
        }
        return 2 * alpha * std::log(smax) + std::log(q);
    }
};

// Quasi-Newton descent of D~_alpha(rho || tau (x) sigma) over sigma in the
// Cholesky chart, starting from sigma0 (full rank).
Minimum polish_minimizer(const HypothesisInstance &inst, double alpha, const HermitianOperator &sigma0, int max_iterations) {
    const SandwichedObjective objective(inst, alpha);
    const CholeskyChart chart(inst.dim_b());
    auto f = [&](const RealVector &x) { return objective(chart.state(x), nullptr) / (alpha - 1); };
    auto grad = [&](const RealVector &x) {
        const Matrix l = chart.factor(x);
        const Matrix p = l * l.adjoint();
        const double tr = p.trace().real();
        const HermitianOperator sigma(Matrix(p / tr));
        Matrix gs;
        objective(sigma, &gs);
        gs /= alpha - 1;
        Matrix kmat = (gs - (gs * sigma.matrix()).trace() * Matrix::Identity(sigma.dim(), sigma.dim())) / tr;
        const Matrix kl = kmat * l;
        RealVector out(x.size());
        int idx = 0;
        for (int i = 0; i < sigma.dim(); i++) {
            out(idx++) = 2 * kl(i, i).real();
            for (int j = 0; j < i; j++) {
                out(idx++) = 2 * kl(i, j).real();
                out(idx++) = 2 * kl(i, j).imag();
            }
        }
        return out;
    };
    const Matrix l0 = Eigen::LLT<Matrix>(sigma0.matrix()).matrixL();
    return bfgs(f, grad, chart.coordinates(l0), max_iterations, 1e-12);
}

// Q~_alpha is convex in sigma for alpha > 1, so with G the gradient of log Q
// the Frank-Wolfe gap Q (tr[G sigma] - lambda_min(G)) bounds Q - Q*. Returns
// the implied bound on D~_alpha(sigma) - min D~_alpha.
double frank_wolfe_bound(const HypothesisInstance &inst, double alpha, const HermitianOperator &sigma) {
    Matrix g;
    if (!std::isfinite(SandwichedObjective(inst, alpha)(sigma, &g))) {
        return kInf;
    }
    const HermitianOperator gh(g);
    const double rel = (g * sigma.matrix()).trace().real() - gh.spectrum().min();
    return rel < 1 ? -std::log1p(-std::max(rel, 0.0)) / (alpha - 1) : kInf;
}

struct Polished {
    HermitianOperator sigma;
    double value = kInf;
    double bound = kInf;
    int iterations = 0;
};

// Newton steps on the stationarity condition along traceless Hermitian
// directions, with the Hessian from central differences of the analytic
// gradient. Steps are kept only when they lower the Frank-Wolfe bound, so the
// certificate stays valid. Used once quasi-Newton descent stalls at roundoff
// in the objective while the gradient is still visible.
void newton_refine(const HypothesisInstance &inst, double alpha, Polished &out) {
    const SandwichedObjective objective(inst, alpha);
    const int d = inst.dim_b();
    std::vector<Matrix> dirs;
    const std::vector<Matrix> basis = hermitian_basis(d);
    for (int i = 0; i + 1 < d; i++) {
        dirs.push_back(basis[i] - basis[d - 1]);
    }
    for (size_t k = d; k < basis.size(); k++) {
        dirs.push_back(basis[k]);
    }
    const int m = static_cast<int>(dirs.size());
    auto grad = [&](const Matrix &sigma, RealVector &g) {
        Matrix gm;
        if (!std::isfinite(objective(HermitianOperator(sigma), &gm))) {
            return false;
        }
        g.resize(m);
        for (int k = 0; k < m; k++) {
            g(k) = (gm * dirs[k]).trace().real();
        }
        return g.allFinite();
    };
    for (int step = 0; step < kNewtonSteps && out.bound > kCertificateTolerance * std::max(1.0, std::abs(out.value)); step++) {
        const Matrix sigma = out.sigma.matrix();
        RealVector g;
        if (!grad(sigma, g)) {
            return;
        }
        const double h = 1e-4 * out.sigma.spectrum().min();
        Eigen::MatrixXd hess(m, m);
        for (int l = 0; l < m; l++) {
            RealVector up;
            RealVector down;
            if (!grad(sigma + h * dirs[l], up) || !grad(sigma - h * dirs[l], down)) {
                return;
            }
            hess.col(l) = (up - down) / (2 * h);
        }
        hess = (hess + hess.transpose()).eval() / 2;
        const RealVector c = -hess.completeOrthogonalDecomposition().solve(g);
        if (!c.allFinite()) {
            return;
        }
        Matrix delta = Matrix::Zero(d, d);
        for (int k = 0; k < m; k++) {
            delta += c(k) * dirs[k];
        }
        bool improved = false;
        for (double t = 1; t > 1e-4; t /= 2) {
            const HermitianOperator candidate(Matrix(sigma + t * delta));
            if (!(candidate.spectrum().min() > 0)) {
                continue;
            }
            const double bound = frank_wolfe_bound(inst, alpha, candidate);
            if (bound < out.bound) {
                out.sigma = candidate;
                out.value = objective(candidate, nullptr) / (alpha - 1);
                out.bound = bound;
                improved = true;
                break;
            }
        }
        if (!improved) {
            return;
        }
    }
}

// Restarted quasi-Newton descent until the Frank-Wolfe bound certifies the value.
Polished polish(const HypothesisInstance &inst, double alpha, HermitianOperator sigma, int max_iterations) {
    const CholeskyChart chart(inst.dim_b());
    Polished out;
    out.sigma = sigma;
    out.value = SandwichedObjective(inst, alpha)(sigma, nullptr) / (alpha - 1);
    out.bound = frank_wolfe_bound(inst, alpha, sigma);
    for (int round = 0; round < kPolishRounds && out.bound > kCertificateTolerance * std::max(1.0, std::abs(out.value)); round++) {
        Minimum m = polish_minimizer(inst, alpha, out.sigma, max_iterations);
        out.iterations += m.iterations;
        if (!(m.f <= out.value)) {
            break;
        }
        out.sigma = chart.state(m.x);
        out.value = m.f;
        out.bound = frank_wolfe_bound(inst, alpha, out.sigma);
    }
    newton_refine(inst, alpha, out);
    return out;
}

}  // namespace

HypothesisInstance::HypothesisInstance(BipartiteState rho, HermitianOperator tau) : rho_(std::move(rho)), tau_(std::move(tau)) {
    if (tau_.dim() != rho_.dim_a()) {
        throw std::invalid_argument("HypothesisInstance: tau dimension does not match A");
    }
    Spectrum ts = tau_.spectrum();
    if (ts.min() < -kStateTolerance * std::max(1.0, ts.max())) {
        throw std::invalid_argument("HypothesisInstance: tau is not positive semi-definite");
    }
    if (!support_contained(rho_.marginal_a().op(), ts)) {
        throw std::invalid_argument("HypothesisInstance: supp(rho_A) is not contained in supp(tau)");
    }
}

HypothesisInstance HypothesisInstance::mutual_information(const BipartiteState &rho) {
    return HypothesisInstance(rho, rho.marginal_a().op());
}

HypothesisInstance HypothesisInstance::conditional(const BipartiteState &rho) {
    return HypothesisInstance(rho, HermitianOperator::identity(rho.dim_a()));
}

HermitianOperator HypothesisInstance::reference(const HermitianOperator &sigma_b) const {
    return tensor(tau_, sigma_b);
}

const char *to_string(MIMethod method) {
    switch (method) {
        case MIMethod::kSibsonClosedForm:
            return "sibson-closed-form";
        case MIMethod::kFixedPoint:
            return "fixed-point";
        case MIMethod::kDualityFixedPoint:
            return "duality-fixed-point";
        case MIMethod::kDirectMinimization:
            return "direct-minimization";
        case MIMethod::kBarrierSdp:
            return "barrier-sdp";
    }
    return "unknown";
}

HermitianOperator support_inverse(const HermitianOperator &tau) {
    return mat_power(tau, -1);
}

RelativeEntropyVariance mi_variance(const HypothesisInstance &inst) {
    return rel_entropy_and_variance(inst.rho().state(), inst.reference(inst.rho().marginal_b().op()));
}

MIResult sibson_minimizer(const HypothesisInstance &inst, AlphaParam alpha) {
    const double a = alpha.value;
    if (!(a > 0) || alpha.is_infinite()) {
        throw std::invalid_argument("sibson_minimizer: alpha must be positive and finite");
    }
    if (alpha.near_one()) {
        return relative_entropy_point(inst, a);
    }
    const Matrix t = kron(mat_power(inst.tau(), (1 - a) / 2).matrix(), Matrix::Identity(inst.dim_b(), inst.dim_b()));
    const Matrix weighted = t * mat_power(inst.rho().state().op(), a).matrix() * t;
    const int dims[] = {inst.dim_a(), inst.dim_b()};
    const Spectrum ms = HermitianOperator(partial_trace_matrix(weighted, dims, kKeepB)).spectrum();
    MIResult r;
    r.method = MIMethod::kSibsonClosedForm;
    const double top = ms.max();
    if (!(top > 0)) {
        r.value = kInf;
        r.support_violation = true;
        r.minimizer = inst.rho().marginal_b();
        return r;
    }
    // M^(1/alpha) scaled by lambda_max^(-1/alpha) so that small alpha neither
    // overflows nor underflows.
    const double cutoff = kSupportCutoff * top;
    RealVector scaled = RealVector::Zero(ms.dim());
    for (int i = 0; i < ms.dim(); i++) {
        if (ms.eigenvalues(i) > cutoff) {
            scaled(i) = std::exp(std::log(ms.eigenvalues(i) / top) / a);
        }
    }
    const double sum = scaled.sum();
    r.value = (std::log(top) + a * std::log(sum)) / (a - 1);
    r.minimizer = DensityMatrix::normalized(HermitianOperator::from_spectrum(scaled / sum, ms.eigenvectors));
    return r;
}

MIResult petz_mi(const HypothesisInstance &inst, AlphaParam alpha) {
    if (alpha.is_infinite()) {
        throw std::domain_error("petz_mi: alpha = infinity is not implemented");
    }
    if (alpha.value > 0) {
        return sibson_minimizer(inst, alpha);
    }
    // min over sigma of -log tr[sigma N] is attained at the top eigenvector of N.
    const Matrix t = kron(mat_power(inst.tau(), 0.5).matrix(), Matrix::Identity(inst.dim_b(), inst.dim_b()));
    const int dims[] = {inst.dim_a(), inst.dim_b()};
    HermitianOperator n(partial_trace_matrix(t * support_projector(inst.rho().state().op()).matrix() * t, dims, kKeepB));
    Spectrum ns = n.spectrum();
    MIResult r;
    r.method = MIMethod::kSibsonClosedForm;
    r.minimizer = DensityMatrix::pure(ns.eigenvectors.col(0));
    if (!(ns.max() > 0)) {
        r.value = kInf;
        r.support_violation = true;
        return r;
    }
    r.value = -std::log(ns.max());
    return r;
}

std::pair<DensityMatrix, double> sandwiched_fp_map(const HypothesisInstance &inst, double alpha, const DensityMatrix &sigma) {
    if (!(alpha >= 0.5) || alpha == 1 || std::isinf(alpha)) {
        throw std::invalid_argument("sandwiched_fp_map: alpha must be finite, >= 1/2 and != 1");
    }
    if (sigma.dim() != inst.dim_b()) {
        throw std::invalid_argument("sandwiched_fp_map: sigma dimension does not match B");
    }
    FixedPointProblem p(inst, alpha);
    if (!support_contained(p.rho_b, sigma.op().spectrum())) {
        throw std::runtime_error("sandwiched_fp_map: sigma lost rank on supp(rho_B); reseed from the maximally mixed state");
    }
    Evaluation ev = evaluate(p, sigma.op());
    return {DensityMatrix::normalized(ev.x), ev.chi};
}

MIResult sandwiched_mi(const HypothesisInstance &inst, AlphaParam alpha, const MIOptions &options) {
    const double a = alpha.value;
    if (a < 0.5) {
        throw std::domain_error("sandwiched_mi: alpha must be at least 1/2");
    }
    if (!alpha.is_infinite() && alpha.near_one()) {
        return relative_entropy_point(inst, a);
    }
    if (a < 1) {
        MIResult r = fixed_point_result(inst, a, options.max_iterations);
        cross_check(r, inst, alpha, options);
        return r;
    }
    MIResult r;
    if (alpha.is_infinite()) {
        MaxOrderSolution m = solve_max_order(inst);
        r.value = m.value;
        r.minimizer = DensityMatrix::normalized(m.s);
        r.iterations = m.iterations;
        r.converged = m.converged;
        r.method = MIMethod::kBarrierSdp;
        return r;
    }
    // The dual value bounds I~_alpha from below and every sigma_B from above.
    DualSolution d = solve_dual(inst, dual_order(alpha), std::min(options.max_iterations, kDualWarmStart));
    const double lower = -std::log(d.outcome.chi) / (d.beta - 1);
    const int db = inst.dim_b();
    const HermitianOperator response = best_response(inst, d).op() * (1 - kResponseMixing) + HermitianOperator::identity(db) * (kResponseMixing / db);
    const double upper = SandwichedObjective(inst, a)(response, nullptr) / (a - 1);
    r.iterations = d.outcome.iterations;
    if (d.outcome.converged && upper - lower <= kBracketTolerance * std::max(1.0, std::abs(lower))) {
        r.value = lower;
        r.minimizer = DensityMatrix::normalized(response);
        r.method = MIMethod::kDualityFixedPoint;
    } else {
        Polished p = polish(inst, a, response, options.max_iterations);
        r.value = p.value;
        r.minimizer = DensityMatrix::normalized(p.sigma);
        r.iterations += p.iterations;
        // Either certificate suffices: the Frank-Wolfe bound or a dual lower bound.
        const double tolerance = kCertificateTolerance * std::max(1.0, std::abs(p.value));
        double dual_lower = lower;
        if (p.bound > tolerance && p.value - dual_lower > tolerance && options.max_iterations > kDualWarmStart) {
            const DualSolution full = solve_dual(inst, dual_order(alpha), options.max_iterations);
            dual_lower = std::max(dual_lower, -std::log(full.outcome.chi) / (full.beta - 1));
            r.iterations += full.outcome.iterations;
        }
        r.converged = std::min(p.bound, p.value - dual_lower) <= tolerance;
        r.method = MIMethod::kDirectMinimization;
    }
    cross_check(r, inst, alpha, options);
    return r;
}

MIResult dual_mi(const HypothesisInstance &inst, AlphaParam alpha, const MIOptions &options) {
    const double a = alpha.value;
    if (a < 0.5) {
        throw std::domain_error("dual_mi: alpha must be at least 1/2");
    }
    if (!alpha.is_infinite() && alpha.near_one()) {
        MIResult r = relative_entropy_point(inst, a);
        r.method = MIMethod::kDualityFixedPoint;
        return r;
    }
    MIResult r;
    if (a == 0.5) {
        // beta = infinity on AC; dualizing back lands on a purification of
        // rho_AC, a different basis from the original B-side problem.
        HypothesisInstance ac(purify(inst.rho()).marginal_ac(), support_inverse(inst.tau()));
        MIResult inner = sandwiched_mi(ac, AlphaParam::infinity(), options);
        r = inner;
        r.value = -inner.value;
    } else {
        DualSolution d = solve_dual(inst, dual_order(alpha), options.max_iterations);
        r.value = -std::log(d.outcome.chi) / (d.beta - 1);
        r.minimizer = DensityMatrix::normalized(d.outcome.sigma);
        r.iterations = d.outcome.iterations;
        r.converged = d.outcome.converged;
        if (a > 1) {
            // Fixed points of the AC map can sit on a face of the state space
            // without being optimal; the best response certifies the value.
            const double upper = divergence(DivergenceKind::kSandwiched, inst.rho().state(), inst.reference(best_response(inst, d).op()), alpha).value;
            if (!(upper - r.value <= kBracketTolerance * std::max(1.0, std::abs(r.value)))) {
                r.converged = false;
            }
        }
    }
    r.method = MIMethod::kDualityFixedPoint;
    return r;
}

MIResult direct_minimization(const HypothesisInstance &inst, DivergenceKind kind, AlphaParam alpha, const DirectOptions &options) {
    const int db = inst.dim_b();
    CholeskyChart chart(db);
    const DensityMatrix &rho = inst.rho().state();
    auto objective = [&](const RealVector &x) {
        HermitianOperator sigma = chart.state(x);
        if (!sigma.matrix().allFinite()) {
            return kInf;
        }
        DivergenceValue v = divergence(kind, rho, inst.reference(sigma), alpha);
        return v.support_violation ? kInf : v.value;
    };
    Rng rng(options.seed);
    Minimum best;
    int total = 0;
    for (int start = 0; start < std::max(1, options.restarts); start++) {
        RealVector x0;
        if (start == 0) {
            x0 = chart.coordinates_of_state(inst.rho().marginal_b().op());
        } else if (start == 1) {
            x0 = chart.coordinates_of_state(DensityMatrix::maximally_mixed(db).op());
        } else {
            x0 = chart.coordinates(Matrix(ginibre(db, db, rng).triangularView<Eigen::Lower>()));
        }
        auto numeric_gradient = [&](const RealVector &x) { return gradient(objective, x); };
        Minimum m = bfgs(objective, numeric_gradient, x0, options.max_iterations, 1e-11);
        total += m.iterations;
        if (m.f < best.f) {
            best = m;
        }
    }
    MIResult r;
    r.method = MIMethod::kDirectMinimization;
    r.iterations = total;
    if (!std::isfinite(best.f)) {
        r.value = kInf;
        r.support_violation = true;
        r.minimizer = inst.rho().marginal_b();
        return r;
    }
    r.value = best.f;
    r.minimizer = DensityMatrix::normalized(chart.state(best.x));
    return r;
}

double specialize(InformationKind info, const BipartiteState &rho, AlphaParam alpha, DivergenceKind kind) {
    HypothesisInstance inst = info == InformationKind::kMutualInfo ? HypothesisInstance::mutual_information(rho) : HypothesisInstance::conditional(rho);
    MIResult r = kind == DivergenceKind::kPetz ? petz_mi(inst, alpha) : sandwiched_mi(inst, alpha);
    return info == InformationKind::kMutualInfo ? r.value : -r.value;
}

}  // namespace qrmi
