#include "qrmi/operator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qrmi {

double Spectrum::max() const {
    return eigenvalues.size() ? eigenvalues(0) : 0.0;
}

double Spectrum::min() const {
    return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0;
}

HermitianOperator::HermitianOperator(const Matrix &m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("HermitianOperator: matrix is not square");
    }
    if (m.rows() == 0) {
        throw std::invalid_argument("HermitianOperator: empty matrix");
    }
    Matrix adj = m.adjoint();
    correction_ = 0.5 * (m - adj).cwiseAbs().maxCoeff();
    m_ = 0.5 * (m + adj);
}

HermitianOperator HermitianOperator::zero(int dim) {
    return HermitianOperator(Matrix::Zero(dim, dim));
}

HermitianOperator HermitianOperator::identity(int dim) {
    return HermitianOperator(Matrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::diagonal(const RealVector &diag) {
    return HermitianOperator(Matrix(diag.cast<Complex>().asDiagonal()));
}

HermitianOperator HermitianOperator::diagonal(std::initializer_list<double> diag) {
    RealVector v(static_cast<Eigen::Index>(diag.size()));
    Eigen::Index i = 0;
    for (double x : diag) {
        v(i++) = x;
    }
    return diagonal(v);
}

HermitianOperator HermitianOperator::projector(const Vector &v) {
    return HermitianOperator(Matrix(v * v.adjoint()));
}

HermitianOperator HermitianOperator::from_spectrum(const RealVector &eigenvalues, const Matrix &eigenvectors) {
    return HermitianOperator(Matrix(eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint()));
}

double HermitianOperator::trace() const {
    return m_.trace().real();
}

double HermitianOperator::max_abs() const {
    return m_.cwiseAbs().maxCoeff();
}

double HermitianOperator::frobenius_norm() const {
    return m_.norm();
}

Spectrum HermitianOperator::spectrum() const {
    // Solving for -M gives descending order while keeping degenerate
    // eigenvectors in basis order for diagonal inputs.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(-m_);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("HermitianOperator: eigensolver failed");
    }
    Spectrum s;
    s.eigenvalues = -solver.eigenvalues();
    s.eigenvectors = solver.eigenvectors();
    return s;
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator &other) const {
    if (dim() != other.dim()) {
        throw std::invalid_argument("HermitianOperator: dimension mismatch in +");
    }
    return HermitianOperator(Matrix(m_ + other.m_));
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator &other) const {
    if (dim() != other.dim()) {
        throw std::invalid_argument("HermitianOperator: dimension mismatch in -");
    }
    return HermitianOperator(Matrix(m_ - other.m_));
}

HermitianOperator HermitianOperator::operator*(double scale) const {
    return HermitianOperator(Matrix(m_ * scale));
}

HermitianOperator HermitianOperator::conjugated(const Matrix &u) const {
    return HermitianOperator(Matrix(u * m_ * u.adjoint()));
}

DensityMatrix::DensityMatrix(HermitianOperator op) : op_(std::move(op)) {
    double tr = op_.trace();
    if (std::abs(tr - 1.0) > kStateTolerance) {
        throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr) + " differs from 1");
    }
    double lo = op_.spectrum().min();
    if (lo < -kStateTolerance) {
        throw std::invalid_argument("DensityMatrix: negative eigenvalue " + std::to_string(lo));
    }
}

DensityMatrix::DensityMatrix(HermitianOperator op, Unchecked) : op_(std::move(op)) {
    double tr = op_.trace();
    if (std::abs(tr - 1.0) > kStateTolerance) {
        throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr) + " differs from 1");
    }
}

DensityMatrix DensityMatrix::trusted(HermitianOperator op) {
    return DensityMatrix(std::move(op), Unchecked{});
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    return trusted(HermitianOperator::identity(dim) * (1.0 / dim));
}

DensityMatrix DensityMatrix::pure(const Vector &psi) {
    double n2 = psi.squaredNorm();
    if (n2 <= 0) {
        throw std::invalid_argument("DensityMatrix::pure: zero vector");
    }
    return DensityMatrix(HermitianOperator::projector(psi) * (1.0 / n2));
}

DensityMatrix DensityMatrix::diagonal(std::initializer_list<double> probabilities) {
    return DensityMatrix(HermitianOperator::diagonal(probabilities));
}

DensityMatrix DensityMatrix::normalized(const HermitianOperator &op) {
    double tr = op.trace();
    if (!(tr > 0)) {
        throw std::invalid_argument("DensityMatrix::normalized: nonpositive trace");
    }
    return DensityMatrix(op * (1.0 / tr));
}

BipartiteState::BipartiteState(DensityMatrix state, int dim_a, int dim_b)
    : state_(std::move(state)), dim_a_(dim_a), dim_b_(dim_b) {
    if (dim_a <= 0 || dim_b <= 0 || dim_a * dim_b != state_.dim()) {
        throw std::invalid_argument("BipartiteState: factor dimensions do not match the state");
    }
}

DensityMatrix BipartiteState::marginal_a() const {
    const int dims[] = {dim_a_, dim_b_};
    const int keep[] = {0};
    return DensityMatrix(partial_trace(state_.op(), dims, keep));
}

DensityMatrix BipartiteState::marginal_b() const {
    const int dims[] = {dim_a_, dim_b_};
    const int keep[] = {1};
    return DensityMatrix(partial_trace(state_.op(), dims, keep));
}

Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); i++) {
        for (Eigen::Index j = 0; j < a.cols(); j++) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

HermitianOperator tensor(const HermitianOperator &a, const HermitianOperator &b) {
    return HermitianOperator(kron(a.matrix(), b.matrix()));
}

DensityMatrix tensor(const DensityMatrix &a, const DensityMatrix &b) {
    return DensityMatrix::trusted(tensor(a.op(), b.op()));
}

HermitianOperator tensor_power(const HermitianOperator &a, int n) {
    if (n < 1) {
        throw std::invalid_argument("tensor_power: n must be positive");
    }
    Matrix out = a.matrix();
    for (int k = 1; k < n; k++) {
        out = kron(out, a.matrix());
    }
    return HermitianOperator(out);
}

namespace {

int checked_product(std::span<const int> dims) {
    long long total = 1;
    for (int d : dims) {
        if (d <= 0) {
            throw std::invalid_argument("subsystem dimensions must be positive");
        }
        total *= d;
        if (total > (1LL << 30)) {
            throw std::invalid_argument("subsystem dimensions overflow");
        }
    }
    return static_cast<int>(total);
}

}  // namespace

Matrix partial_trace_matrix(const Matrix &m, std::span<const int> dims, std::span<const int> keep) {
    const int total = checked_product(dims);
    if (m.rows() != total || m.cols() != total) {
        throw std::invalid_argument(
            "partial_trace: operator dimension " + std::to_string(m.rows()) + " does not match product of dims " +
            std::to_string(total));
    }
    const int k = static_cast<int>(dims.size());
    std::vector<bool> kept(k, false);
    for (int idx : keep) {
        if (idx < 0 || idx >= k || kept[idx]) {
            throw std::invalid_argument("partial_trace: invalid keep index");
        }
        kept[idx] = true;
    }

    // Strides of each subsystem in the full index, and in the kept / traced sub-indices.
    std::vector<int> stride(k);
    int s = 1;
    for (int i = k - 1; i >= 0; i--) {
        stride[i] = s;
        s *= dims[i];
    }
    std::vector<int> keep_stride(k, 0), trace_stride(k, 0);
    int ks = 1, ts = 1;
    for (int i = k - 1; i >= 0; i--) {
        if (kept[i]) {
            keep_stride[i] = ks;
            ks *= dims[i];
        } else {
            trace_stride[i] = ts;
            ts *= dims[i];
        }
    }
    const int keep_dim = ks;
    const int trace_dim = ts;

    // groups[t][r] = full index with traced part t and kept part r.
    std::vector<int> groups(static_cast<size_t>(trace_dim) * keep_dim);
    for (int full = 0; full < total; full++) {
        int r = 0, t = 0;
        for (int i = 0; i < k; i++) {
            int digit = (full / stride[i]) % dims[i];
            r += digit * keep_stride[i];
            t += digit * trace_stride[i];
        }
        groups[static_cast<size_t>(t) * keep_dim + r] = full;
    }

    Matrix out = Matrix::Zero(keep_dim, keep_dim);
    for (int t = 0; t < trace_dim; t++) {
        const int *g = &groups[static_cast<size_t>(t) * keep_dim];
        for (int c = 0; c < keep_dim; c++) {
            for (int r = 0; r < keep_dim; r++) {
                out(r, c) += m(g[r], g[c]);
            }
        }
    }
    return out;
}

HermitianOperator partial_trace(const HermitianOperator &m, std::span<const int> dims, std::span<const int> keep) {
    return HermitianOperator(partial_trace_matrix(m.matrix(), dims, keep));
}

HermitianOperator mat_func(const Spectrum &spec, const std::function<double(double)> &f, Support support) {
    const int n = spec.dim();
    RealVector mapped(n);
    const double top = std::max(spec.max(), 0.0);
    const double cutoff = kSupportCutoff * top;
    for (int i = 0; i < n; i++) {
        double lambda = spec.eigenvalues(i);
        if (support == Support::kOnly) {
            if (lambda < -kStateTolerance * std::max(1.0, top)) {
                throw std::domain_error("mat_func: negative eigenvalue " + std::to_string(lambda) +
                                        " for a function defined on the support");
            }
            mapped(i) = (lambda <= cutoff) ? 0.0 : f(lambda);
        } else {
            mapped(i) = f(lambda);
        }
    }
    return HermitianOperator::from_spectrum(mapped, spec.eigenvectors);
}

HermitianOperator mat_func(const HermitianOperator &h, const std::function<double(double)> &f, Support support) {
    return mat_func(h.spectrum(), f, support);
}

HermitianOperator mat_power(const Spectrum &spec, double p) {
    return mat_func(spec, [p](double x) { return std::pow(x, p); }, Support::kOnly);
}

HermitianOperator mat_power(const HermitianOperator &h, double p) {
    return mat_power(h.spectrum(), p);
}

HermitianOperator mat_log(const HermitianOperator &h) {
    return mat_func(h, [](double x) { return std::log(x); }, Support::kOnly);
}

HermitianOperator support_projector(const Spectrum &spec) {
    return mat_func(spec, [](double) { return 1.0; }, Support::kOnly);
}

HermitianOperator support_projector(const HermitianOperator &h) {
    return support_projector(h.spectrum());
}

int support_rank(const Spectrum &spec) {
    const double cutoff = kSupportCutoff * std::max(spec.max(), 0.0);
    int r = 0;
    for (int i = 0; i < spec.dim(); i++) {
        if (spec.eigenvalues(i) > cutoff) {
            r++;
        }
    }
    return r;
}

HermitianOperator threshold_projector(const Spectrum &difference) {
    const int n = difference.dim();
    int count = 0;
    while (count < n && difference.eigenvalues(count) >= -kThresholdTie) {
        count++;
    }
    const auto v = difference.eigenvectors.leftCols(count);
    return HermitianOperator(Matrix(v * v.adjoint()));
}

HermitianOperator threshold_projector(const HermitianOperator &l, const HermitianOperator &k) {
    return threshold_projector((l - k).spectrum());
}

DensityMatrix Purification::density() const {
    return DensityMatrix::pure(psi);
}

BipartiteState Purification::marginal_ac() const {
    const int dims[] = {dim_a, dim_b, dim_c};
    const int keep[] = {0, 2};
    return BipartiteState(DensityMatrix(partial_trace(density().op(), dims, keep)), dim_a, dim_c);
}

Purification purify(const BipartiteState &rho) {
    Spectrum spec = rho.state().op().spectrum();
    const int rank = std::max(1, support_rank(spec));
    const int dab = rho.dim();
    Purification p;
    p.dim_a = rho.dim_a();
    p.dim_b = rho.dim_b();
    p.dim_c = rank;
    p.psi = Vector::Zero(static_cast<Eigen::Index>(dab) * rank);
    for (int i = 0; i < rank; i++) {
        double w = std::sqrt(std::max(spec.eigenvalues(i), 0.0));
        for (int x = 0; x < dab; x++) {
            p.psi(static_cast<Eigen::Index>(x) * rank + i) = w * spec.eigenvectors(x, i);
        }
    }
    return p;
}

namespace {

std::vector<int> permutation_index_map(std::span<const int> dims, std::span<const int> perm) {
    const int k = static_cast<int>(dims.size());
    if (static_cast<int>(perm.size()) != k) {
        throw std::invalid_argument("permute_subsystems: permutation length mismatch");
    }
    std::vector<bool> seen(k, false);
    for (int p : perm) {
        if (p < 0 || p >= k || seen[p]) {
            throw std::invalid_argument("permute_subsystems: not a permutation");
        }
        seen[p] = true;
    }
    const int total = checked_product(dims);
    std::vector<int> in_stride(k);
    int s = 1;
    for (int i = k - 1; i >= 0; i--) {
        in_stride[i] = s;
        s *= dims[i];
    }
    // Output subsystem j has dimension dims[perm[j]].
    std::vector<int> out_dims(k);
    for (int j = 0; j < k; j++) {
        out_dims[j] = dims[perm[j]];
    }
    std::vector<int> map(total);
    for (int out = 0; out < total; out++) {
        int rem = out;
        int in = 0;
        for (int j = k - 1; j >= 0; j--) {
            int digit = rem % out_dims[j];
            rem /= out_dims[j];
            in += digit * in_stride[perm[j]];
        }
        map[out] = in;
    }
    return map;
}

}  // namespace

Matrix permute_subsystems_matrix(const Matrix &m, std::span<const int> dims, std::span<const int> perm) {
    std::vector<int> map = permutation_index_map(dims, perm);
    const int total = static_cast<int>(map.size());
    if (m.rows() != total || m.cols() != total) {
        throw std::invalid_argument("permute_subsystems: dimension mismatch");
    }
    Matrix out(total, total);
    for (int c = 0; c < total; c++) {
        for (int r = 0; r < total; r++) {
            out(r, c) = m(map[r], map[c]);
        }
    }
    return out;
}

HermitianOperator permute_subsystems(const HermitianOperator &m, std::span<const int> dims, std::span<const int> perm) {
    return HermitianOperator(permute_subsystems_matrix(m.matrix(), dims, perm));
}

HermitianOperator symmetrize(const HermitianOperator &m, int d, int n) {
    if (n < 1 || d < 1) {
        throw std::invalid_argument("symmetrize: n and d must be positive");
    }
    if (n > kMaxSymmetrizeCopies) {
        throw std::invalid_argument("symmetrize: refusing n! enumeration for n > 8");
    }
    long long total = 1;
    for (int i = 0; i < n; i++) {
        total *= d;
    }
    if (m.dim() != total) {
        throw std::invalid_argument("symmetrize: operator dimension is not d^n");
    }
    std::vector<int> dims(n, d);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Matrix acc = Matrix::Zero(m.dim(), m.dim());
    long long count = 0;
    do {
        acc += permute_subsystems_matrix(m.matrix(), dims, perm);
        count++;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return HermitianOperator(Matrix(acc / static_cast<double>(count)));
}

double commutator_norm(const Matrix &a, const Matrix &b) {
    return (a * b - b * a).norm();
}

double min_eigenvalue(const HermitianOperator &h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

double max_eigenvalue(const HermitianOperator &h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

double trace_distance(const HermitianOperator &a, const HermitianOperator &b) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver((a - b).matrix(), Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace qrmi
