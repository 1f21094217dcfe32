#include "qrmi/divergence.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qrmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLeakTolerance = 1e-10;

DivergenceValue violation() {
    return {kInf, true};
}

// log(sum_i exp(x_i)) over finite entries; -inf for an empty sum.
double log_sum_exp(const std::vector<double> &xs) {
    double top = -kInf;
    for (double x : xs) {
        top = std::max(top, x);
    }
    if (top == -kInf) {
        return -kInf;
    }
    double s = 0;
    for (double x : xs) {
        s += std::exp(x - top);
    }
    return top + std::log(s);
}

// Singular values below this fraction of the largest are numerical zeros.
constexpr double kSingularCutoff = 1e-13;

// Singular values of sigma^(g/2) rho^(1/2). Their squares are the eigenvalues
// of sigma^(g/2) rho sigma^(g/2), resolved far below double precision of the
// product itself, which matters for small alpha.
RealVector sandwich_singular_values(const DensityMatrix &rho, const Spectrum &sigma, double g) {
    const Matrix b = mat_power(sigma, g / 2).matrix() * mat_power(rho.op(), 0.5).matrix();
    Eigen::BDCSVD<Matrix> svd(b);
    return svd.singularValues();
}

double sum_of_powers(const RealVector &singular, double p) {
    const double cutoff = kSingularCutoff * (singular.size() ? singular.maxCoeff() : 0.0);
    double s = 0;
    for (Eigen::Index i = 0; i < singular.size(); i++) {
        if (singular(i) > cutoff) {
            s += std::pow(singular(i), 2 * p);
        }
    }
    return s;
}

void require_positive(const Spectrum &sigma) {
    if (sigma.min() < -kStateTolerance * std::max(1.0, sigma.max())) {
        throw std::invalid_argument("divergence: sigma has a negative eigenvalue " + std::to_string(sigma.min()));
    }
}

DivergenceValue petz(const DensityMatrix &rho, const Spectrum &rs, const Spectrum &ss, double a) {
    if (a == 0) {
        double overlap = (support_projector(rs).matrix() * mat_func(ss, [](double x) { return x; }, Support::kOnly).matrix())
                             .trace()
                             .real();
        if (!(overlap > 0)) {
            return violation();
        }
        return {-std::log(overlap), false};
    }
    if (a > 1 && !support_contained(rho.op(), ss)) {
        return violation();
    }
    HermitianOperator rho_a = mat_power(rs, a);
    HermitianOperator sigma_b = mat_power(ss, 1 - a);
    double q = (rho_a.matrix() * sigma_b.matrix()).trace().real();
    if (!(q > 0)) {
        return violation();
    }
    return {std::log(q) / (a - 1), false};
}

DivergenceValue sandwiched(const DensityMatrix &rho, const Spectrum &ss, double a) {
    if (a > 1 && !support_contained(rho.op(), ss)) {
        return violation();
    }
    double q = sum_of_powers(sandwich_singular_values(rho, ss, (1 - a) / a), a);
    if (!(q > 0)) {
        return violation();
    }
    return {std::log(q) / (a - 1), false};
}

DivergenceValue sandwiched_max(const DensityMatrix &rho, const Spectrum &ss) {
    if (!support_contained(rho.op(), ss)) {
        return violation();
    }
    const double top = sandwich_singular_values(rho, ss, -1).maxCoeff();
    return {2 * std::log(top), false};
}

}  // namespace

const char *to_string(DivergenceKind kind) {
    return kind == DivergenceKind::kPetz ? "petz" : "sandwiched";
}

AlphaParam::AlphaParam(double v) : AlphaParam(v, 1e-4) {
}

AlphaParam::AlphaParam(double v, double window) : value(v), limit_window(window) {
    if (std::isnan(v) || v < 0) {
        throw std::invalid_argument("alpha must be nonnegative");
    }
    if (!(window >= 0)) {
        throw std::invalid_argument("alpha limit window must be nonnegative");
    }
}

AlphaParam AlphaParam::infinity() {
    return AlphaParam(kInf);
}

bool AlphaParam::is_infinite() const {
    return std::isinf(value);
}

bool AlphaParam::near_one() const {
    return std::abs(value - 1) < limit_window || value == 1;
}

bool support_contained(const HermitianOperator &rho, const Spectrum &sigma) {
    const int r = support_rank(sigma);
    const auto kernel = sigma.eigenvectors.rightCols(sigma.dim() - r);
    double leaked = (kernel.adjoint() * rho.matrix() * kernel).trace().real();
    return leaked <= kLeakTolerance * std::max(1.0, rho.trace());
}

RelativeEntropyVariance rel_entropy_and_variance(const DensityMatrix &rho, const HermitianOperator &sigma) {
    Spectrum ss = sigma.spectrum();
    require_positive(ss);
    if (!support_contained(rho.op(), ss)) {
        return {kInf, kInf, true};
    }
    const Matrix log_ratio = mat_log(rho.op()).matrix() - mat_func(ss, [](double x) { return std::log(x); }, Support::kOnly).matrix();
    const double d = (rho.matrix() * log_ratio).trace().real();
    const Matrix centered = log_ratio - d * Matrix::Identity(rho.dim(), rho.dim());
    const double v = (rho.matrix() * centered * centered).trace().real();
    return {d, std::max(v, 0.0), false};
}

DivergenceValue divergence(DivergenceKind kind, const DensityMatrix &rho, const HermitianOperator &sigma, AlphaParam alpha) {
    if (rho.dim() != sigma.dim()) {
        throw std::invalid_argument("divergence: dimension mismatch");
    }
    const double a = alpha.value;
    if (kind == DivergenceKind::kSandwiched && a == 0) {
        throw std::domain_error("sandwiched divergence at alpha = 0 is not implemented");
    }
    if (kind == DivergenceKind::kPetz && alpha.is_infinite()) {
        throw std::domain_error("Petz divergence at alpha = infinity is not implemented");
    }
    if (!alpha.is_infinite() && alpha.near_one()) {
        RelativeEntropyVariance dv = rel_entropy_and_variance(rho, sigma);
        if (dv.support_violation) {
            return violation();
        }
        return {dv.d + (a - 1) * dv.v / 2, false};
    }
    Spectrum ss = sigma.spectrum();
    require_positive(ss);
    if (kind == DivergenceKind::kSandwiched) {
        if (alpha.is_infinite()) {
            return sandwiched_max(rho, ss);
        }
        return sandwiched(rho, ss, a);
    }
    return petz(rho, rho.op().spectrum(), ss, a);
}

std::vector<EigenCluster> eigen_clusters(const RealVector &descending) {
    std::vector<EigenCluster> out;
    const int n = static_cast<int>(descending.size());
    if (n == 0) {
        return out;
    }
    const double tol = kClusterTolerance * descending.cwiseAbs().maxCoeff();
    int begin = 0;
    for (int i = 1; i <= n; i++) {
        if (i == n || descending(i - 1) - descending(i) > tol) {
            out.push_back({descending.segment(begin, i - begin).mean(), begin, i});
            begin = i;
        }
    }
    return out;
}

HermitianOperator pinch(const Spectrum &sigma, const HermitianOperator &rho) {
    if (sigma.dim() != rho.dim()) {
        throw std::invalid_argument("pinch: dimension mismatch");
    }
    const Matrix &u = sigma.eigenvectors;
    Matrix rotated = u.adjoint() * rho.matrix() * u;
    Matrix blocked = Matrix::Zero(rho.dim(), rho.dim());
    for (const EigenCluster &c : eigen_clusters(sigma.eigenvalues)) {
        blocked.block(c.begin, c.begin, c.size(), c.size()) = rotated.block(c.begin, c.begin, c.size(), c.size());
    }
    return HermitianOperator(Matrix(u * blocked * u.adjoint()));
}

HermitianOperator pinch(const HermitianOperator &sigma, const HermitianOperator &rho) {
    return pinch(sigma.spectrum(), rho);
}

int spectrum_count(const Spectrum &sigma) {
    return static_cast<int>(eigen_clusters(sigma.eigenvalues).size());
}

int spectrum_count(const HermitianOperator &sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma.matrix(), Eigen::EigenvaluesOnly);
    return static_cast<int>(eigen_clusters(solver.eigenvalues().reverse()).size());
}

DivergenceValue classical_divergence(std::span<const double> p, std::span<const double> q, double alpha) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("classical_divergence: length mismatch");
    }
    if (std::isnan(alpha) || alpha < 0) {
        throw std::invalid_argument("classical_divergence: alpha must be nonnegative");
    }
    bool escapes = false;
    for (size_t i = 0; i < p.size(); i++) {
        if (p[i] > 0 && !(q[i] > 0)) {
            escapes = true;
        }
    }
    if (alpha == 1) {
        if (escapes) {
            return violation();
        }
        return {classical_entropy_variance(p, q).d, false};
    }
    if (std::isinf(alpha)) {
        if (escapes) {
            return violation();
        }
        double best = -kInf;
        for (size_t i = 0; i < p.size(); i++) {
            if (p[i] > 0) {
                best = std::max(best, std::log(p[i]) - std::log(q[i]));
            }
        }
        return {best, false};
    }
    if (alpha > 1 && escapes) {
        return violation();
    }
    std::vector<double> terms;
    terms.reserve(p.size());
    for (size_t i = 0; i < p.size(); i++) {
        if (p[i] > 0 && q[i] > 0) {
            terms.push_back(alpha == 0 ? std::log(q[i]) : alpha * std::log(p[i]) + (1 - alpha) * std::log(q[i]));
        }
    }
    double log_q = log_sum_exp(terms);
    if (log_q == -kInf) {
        return violation();
    }
    if (alpha == 0) {
        return {-log_q, false};
    }
    return {log_q / (alpha - 1), false};
}

RelativeEntropyVariance classical_entropy_variance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("classical_entropy_variance: length mismatch");
    }
    double d = 0;
    for (size_t i = 0; i < p.size(); i++) {
        if (p[i] > 0) {
            if (!(q[i] > 0)) {
                return {kInf, kInf, true};
            }
            d += p[i] * (std::log(p[i]) - std::log(q[i]));
        }
    }
    double v = 0;
    for (size_t i = 0; i < p.size(); i++) {
        if (p[i] > 0) {
            double dev = std::log(p[i]) - std::log(q[i]) - d;
            v += p[i] * dev * dev;
        }
    }
    return {d, v, false};
}

}  // namespace qrmi
