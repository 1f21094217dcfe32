#include "qrmi/hypothesis_lab.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qrmi/divergence.h"
#include "qrmi/io.h"
#include "qrmi/universal_state.h"

namespace qrmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Off-diagonal A blocks of the rotated state below this (relative) size are
// treated as exact zeros.
constexpr double kBlockZero = 1e-15;

int checked_power(int base, int n) {
    long long r = 1;
    for (int k = 0; k < n; k++) {
        r *= base;
        if (r > kMaxTestDim) {
            throw std::length_error("n-copy dimension exceeds " + std::to_string(kMaxTestDim));
        }
    }
    return static_cast<int>(r);
}

void check_layout(const TestLayout &layout) {
    if (layout.n < 1 || layout.dim_a < 1 || layout.dim_b < 1) {
        throw std::invalid_argument("test layout needs n, dim_a, dim_b >= 1");
    }
    (void)layout.dim();
}

// Digits of an index in base d, most significant first.
void digits_of(int index, int d, int n, std::vector<int> &out) {
    out.resize(n);
    for (int k = n - 1; k >= 0; k--) {
        out[k] = index % d;
        index /= d;
    }
}

// Map from A^n B^n ordering to the (AB)^n ordering of rho^(x)n.
std::vector<int> interleave_map(const TestLayout &layout) {
    const int da_n = layout.dim_a_n();
    const int db_n = layout.dim_b_n();
    const int dab = layout.dim_a * layout.dim_b;
    std::vector<int> map(static_cast<size_t>(da_n) * db_n);
    std::vector<int> a_digits;
    std::vector<int> b_digits;
    for (int a = 0; a < da_n; a++) {
        digits_of(a, layout.dim_a, layout.n, a_digits);
        for (int b = 0; b < db_n; b++) {
            digits_of(b, layout.dim_b, layout.n, b_digits);
            int idx = 0;
            for (int k = 0; k < layout.n; k++) {
                idx = idx * dab + a_digits[k] * layout.dim_b + b_digits[k];
            }
            map[static_cast<size_t>(a) * db_n + b] = idx;
        }
    }
    return map;
}

// Applies `local` to copy k of every column of x, viewed as (C^d)^(x)n.
void apply_on_copy(const Matrix &local, int d, int n, int k, Matrix &x) {
    int stride = 1;
    for (int j = k + 1; j < n; j++) {
        stride *= d;
    }
    const int outer = static_cast<int>(x.rows()) / (stride * d);
    Matrix gathered(d, x.cols());
    for (int o = 0; o < outer; o++) {
        for (int i = 0; i < stride; i++) {
            const int base = o * stride * d + i;
            for (int r = 0; r < d; r++) {
                gathered.row(r) = x.row(base + r * stride);
            }
            const Matrix moved = local * gathered;
            for (int r = 0; r < d; r++) {
                x.row(base + r * stride) = moved.row(r);
            }
        }
    }
}

Matrix kron_columns(const Matrix &w, const std::vector<int> &digits) {
    Matrix out = w.col(digits[0]);
    for (size_t k = 1; k < digits.size(); k++) {
        out = kron(out, Matrix(w.col(digits[k])));
    }
    return out;
}

bool is_diagonal(const Matrix &m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (int c = 0; c < m.cols(); c++) {
        for (int r = 0; r < m.rows(); r++) {
            if (r != c && std::abs(m(r, c)) > kBlockZero * scale) {
                return false;
            }
        }
    }
    return true;
}

// Eigenbasis of tau on A; the identity when tau is already diagonal, so that
// classical instances keep exact zeros.
Spectrum a_basis(const HermitianOperator &tau) {
    if (is_diagonal(tau.matrix())) {
        Spectrum s;
        s.eigenvalues = tau.matrix().diagonal().real();
        s.eigenvectors = Matrix::Identity(tau.dim(), tau.dim());
        return s;
    }
    return tau.spectrum();
}

// Rotated state (W^dagger (x) 1) rho (W (x) 1) split into dB x dB blocks.
struct RotatedBlocks {
    int dim_a = 0;
    int dim_b = 0;
    std::vector<Matrix> blocks;  // index alpha * dim_a + alpha'
    std::vector<bool> zero;

    const Matrix &at(int alpha, int alpha_p) const {
        return blocks[static_cast<size_t>(alpha) * dim_a + alpha_p];
    }
    bool is_zero(int alpha, int alpha_p) const {
        return zero[static_cast<size_t>(alpha) * dim_a + alpha_p];
    }
    bool a_diagonal() const {
        for (int x = 0; x < dim_a; x++) {
            for (int y = 0; y < dim_a; y++) {
                if (x != y && !is_zero(x, y)) {
                    return false;
                }
            }
        }
        return true;
    }
};

RotatedBlocks rotate(const BipartiteState &rho, const Matrix &w_a) {
    RotatedBlocks out;
    out.dim_a = rho.dim_a();
    out.dim_b = rho.dim_b();
    const Matrix u = kron(w_a, Matrix::Identity(out.dim_b, out.dim_b));
    const Matrix r = u.adjoint() * rho.state().matrix() * u;
    const double scale = r.cwiseAbs().maxCoeff();
    for (int x = 0; x < out.dim_a; x++) {
        for (int y = 0; y < out.dim_a; y++) {
            Matrix blk = r.block(x * out.dim_b, y * out.dim_b, out.dim_b, out.dim_b);
            const bool z = x != y && blk.cwiseAbs().maxCoeff() <= kBlockZero * scale;
            if (z) {
                blk.setZero();
            }
            out.blocks.push_back(std::move(blk));
            out.zero.push_back(z);
        }
    }
    return out;
}

// (x)_k rho'_{a_k a'_k} on B^n, or an empty matrix when a factor vanishes.
Matrix copy_block(const RotatedBlocks &r, const std::vector<int> &a, const std::vector<int> &ap) {
    for (size_t k = 0; k < a.size(); k++) {
        if (r.is_zero(a[k], ap[k])) {
            return Matrix();
        }
    }
    Matrix out = r.at(a[0], ap[0]);
    for (size_t k = 1; k < a.size(); k++) {
        out = kron(out, r.at(a[k], ap[k]));
    }
    return out;
}

RealVector product_spectrum(const RealVector &t, int n) {
    RealVector out = RealVector::Ones(1);
    for (int k = 0; k < n; k++) {
        RealVector next(out.size() * t.size());
        for (int i = 0; i < out.size(); i++) {
            for (int j = 0; j < t.size(); j++) {
                next(i * t.size() + j) = out(i) * t(j);
            }
        }
        out = std::move(next);
    }
    return out;
}

Matrix eigen_columns_at_least(const Spectrum &s, double cut) {
    std::vector<int> keep;
    for (int i = 0; i < s.dim(); i++) {
        if (s.eigenvalues(i) >= cut) {
            keep.push_back(i);
        }
    }
    Matrix out(s.eigenvectors.rows(), static_cast<int>(keep.size()));
    for (size_t c = 0; c < keep.size(); c++) {
        out.col(static_cast<int>(c)) = s.eigenvectors.col(keep[c]);
    }
    return out;
}

// Eigenvalues of K = tau^(x)n (x) omega_n span many orders of magnitude, so
// runs are chained on gaps relative to each value rather than to the largest
// one; a gap scaled by lambda_max would merge distinct small eigenvalues.
std::vector<EigenCluster> relative_clusters(const RealVector &descending) {
    std::vector<EigenCluster> out;
    const int n = static_cast<int>(descending.size());
    int begin = 0;
    for (int i = 1; i <= n; i++) {
        if (i == n || descending(i - 1) - descending(i) > kClusterTolerance * descending(i - 1)) {
            out.push_back({descending.segment(begin, i - begin).mean(), begin, i});
            begin = i;
        }
    }
    return out;
}

// True when P and Q at (p, q) pass the likelihood-ratio threshold e^mu.
bool accepted(double p, double q, double mu) {
    if (mu == kInf) {
        return false;
    }
    const double scaled = q == 0 ? 0 : std::exp(mu) * q;
    return p - scaled >= -kThresholdTie;
}

}  // namespace

int TestLayout::dim_a_n() const {
    return checked_power(dim_a, n);
}

int TestLayout::dim_b_n() const {
    return checked_power(dim_b, n);
}

int TestLayout::dim() const {
    return checked_power(dim_a * dim_b, n);
}

TestOperator::TestOperator(Matrix vectors, RealVector weights, TestLayout layout)
    : vectors_(std::move(vectors)), weights_(std::move(weights)), layout_(layout) {}

TestOperator TestOperator::projector(Matrix basis, TestLayout layout) {
    check_layout(layout);
    if (basis.rows() != layout.dim()) {
        throw std::invalid_argument("TestOperator: basis rows do not match the layout");
    }
    RealVector w = RealVector::Ones(basis.cols());
    return TestOperator(std::move(basis), std::move(w), layout);
}

TestOperator TestOperator::general(const HermitianOperator &q, TestLayout layout) {
    check_layout(layout);
    if (q.dim() != layout.dim()) {
        throw std::invalid_argument("TestOperator: operator dimension does not match the layout");
    }
    const Spectrum s = q.spectrum();
    if (s.max() > 1 + kTestEigenvalueSlack || s.min() < -kTestEigenvalueSlack) {
        throw std::invalid_argument("TestOperator: eigenvalues must lie in [0, 1]");
    }
    std::vector<int> keep;
    for (int i = 0; i < s.dim(); i++) {
        if (s.eigenvalues(i) > 0) {
            keep.push_back(i);
        }
    }
    Matrix v(q.dim(), static_cast<int>(keep.size()));
    RealVector w(static_cast<int>(keep.size()));
    for (size_t c = 0; c < keep.size(); c++) {
        v.col(static_cast<int>(c)) = s.eigenvectors.col(keep[c]);
        w(static_cast<int>(c)) = std::min(1.0, s.eigenvalues(keep[c]));
    }
    return TestOperator(std::move(v), std::move(w), layout);
}

TestOperator TestOperator::identity(TestLayout layout) {
    check_layout(layout);
    return projector(Matrix::Identity(layout.dim(), layout.dim()), layout);
}

TestOperator TestOperator::zero(TestLayout layout) {
    check_layout(layout);
    return projector(Matrix(layout.dim(), 0), layout);
}

double TestOperator::rank_weight() const {
    return weights_.sum();
}

HermitianOperator TestOperator::q() const {
    return HermitianOperator(Matrix(vectors_ * weights_.cast<Complex>().asDiagonal() * vectors_.adjoint()));
}

HermitianOperator nfold_state(const BipartiteState &rho, int n) {
    const TestLayout layout{n, rho.dim_a(), rho.dim_b()};
    check_layout(layout);
    const std::vector<int> map = interleave_map(layout);
    const int dim = layout.dim();
    const Matrix full = tensor_power(rho.state().op(), n).matrix();
    Matrix out(dim, dim);
    for (int c = 0; c < dim; c++) {
        for (int r = 0; r < dim; r++) {
            out(r, c) = full(map[r], map[c]);
        }
    }
    return HermitianOperator(out);
}

HermitianOperator nfold_reference(const HermitianOperator &tau, const HermitianOperator &omega_n, int n) {
    checked_power(tau.dim(), n);
    if (static_cast<long long>(omega_n.dim()) * checked_power(tau.dim(), n) > kMaxTestDim) {
        throw std::length_error("n-copy dimension exceeds " + std::to_string(kMaxTestDim));
    }
    return tensor(tensor_power(tau, n), omega_n);
}

double type1_error(const TestOperator &t, const BipartiteState &rho) {
    const TestLayout &layout = t.layout();
    if (layout.dim_a != rho.dim_a() || layout.dim_b != rho.dim_b()) {
        throw std::invalid_argument("type1_error: state dimensions do not match the test");
    }
    const std::vector<int> map = interleave_map(layout);
    const Matrix &v = t.vectors();
    Matrix x(v.rows(), v.cols());
    for (int r = 0; r < v.rows(); r++) {
        x.row(map[r]) = v.row(r);
    }
    const Matrix original = x;
    const int dab = layout.dim_a * layout.dim_b;
    for (int k = 0; k < layout.n; k++) {
        apply_on_copy(rho.state().matrix(), dab, layout.n, k, x);
    }
    double accepted_weight = 0;
    for (int c = 0; c < x.cols(); c++) {
        accepted_weight += t.weights()(c) * original.col(c).dot(x.col(c)).real();
    }
    const double alpha = 1 - accepted_weight;
    if (alpha < -kStateTolerance || alpha > 1 + kStateTolerance) {
        throw std::logic_error("type1_error: value outside [0, 1]");
    }
    return std::clamp(alpha, 0.0, 1.0);
}

double type2_error_worst(const TestOperator &t, const HermitianOperator &tau) {
    const TestLayout &layout = t.layout();
    if (tau.dim() != layout.dim_a) {
        throw std::invalid_argument("type2_error_worst: tau dimension does not match the test");
    }
    const int da_n = layout.dim_a_n();
    const int db_n = layout.dim_b_n();
    const Matrix tt = tensor_power(tau, layout.n).matrix().transpose();
    Matrix m = Matrix::Zero(db_n, db_n);
    for (int c = 0; c < t.vectors().cols(); c++) {
        // Column-major view of v(a * db_n + b) as the db_n x da_n matrix X^T.
        const Eigen::Map<const Matrix> xt(t.vectors().col(c).data(), db_n, da_n);
        m.noalias() += t.weights()(c) * (xt * tt * xt.adjoint());
    }
    return std::max(0.0, max_eigenvalue(HermitianOperator(m)));
}

TestOperator np_projector_test(const HermitianOperator &l, const HermitianOperator &k, double mu, TestLayout layout) {
    if (l.dim() != k.dim()) {
        throw std::invalid_argument("np_projector_test: dimension mismatch");
    }
    if (layout.n == 0) {
        layout = {1, l.dim(), 1};
    }
    check_layout(layout);
    if (layout.dim() != l.dim()) {
        throw std::invalid_argument("np_projector_test: layout does not match the operators");
    }
    if (mu == kInf) {
        return TestOperator::zero(layout);
    }
    const HermitianOperator diff = mu == -kInf ? l : l - k * std::exp(mu);
    return TestOperator::projector(eigen_columns_at_least(diff.spectrum(), -kThresholdTie), layout);
}

uint64_t universal_factor(const HypothesisInstance &inst, int n) {
    return sym_dim(n, std::max(inst.dim_a(), inst.dim_b()));
}

HoeffdingTest hoeffding_test(const HypothesisInstance &inst, int n, double s, double rate) {
    if (!(s > 0 && s < 1)) {
        throw std::invalid_argument("hoeffding_test: s must lie in (0, 1)");
    }
    const TestLayout layout{n, inst.dim_a(), inst.dim_b()};
    check_layout(layout);
    const UniversalState &u = cached_universal_state(n, inst.dim_b());
    HoeffdingTest out;
    out.g = universal_factor(inst, n);
    out.information = petz_mi(inst, s).value;
    const double log_g = std::log(static_cast<double>(out.g));
    out.lambda = (log_g + n * (rate - (1 - s) * out.information)) / s;
    out.alpha_bound = std::exp((1 - s) / s * (log_g + n * rate - n * out.information));
    out.beta_bound = std::exp(-n * rate);
    const double scale = std::exp(out.lambda);

    const Spectrum ta = a_basis(inst.tau());
    const RotatedBlocks r = rotate(inst.rho(), ta.eigenvectors);
    if (!r.a_diagonal()) {
        const HermitianOperator l = nfold_state(inst.rho(), n);
        const HermitianOperator k = nfold_reference(inst.tau(), u.omega.op(), n);
        out.test = TestOperator::projector(eigen_columns_at_least((l - k * scale).spectrum(), -kThresholdTie), layout);
        return out;
    }
    // rho is block diagonal in the tau eigenbasis on A: the difference
    // splits into one B^n block per A string.
    const int da_n = layout.dim_a_n();
    const int db_n = layout.dim_b_n();
    const RealVector t = product_spectrum(ta.eigenvalues, n);
    std::vector<Matrix> columns;
    int total = 0;
    std::vector<int> a;
    for (int ai = 0; ai < da_n; ai++) {
        digits_of(ai, layout.dim_a, n, a);
        Matrix d = copy_block(r, a, a);
        d -= u.omega.matrix() * (scale * t(ai));
        Matrix sel = eigen_columns_at_least(HermitianOperator(d).spectrum(), -kThresholdTie);
        if (sel.cols() == 0) {
            continue;
        }
        columns.push_back(kron(kron_columns(ta.eigenvectors, a), sel));
        total += static_cast<int>(sel.cols());
    }
    Matrix basis(static_cast<long long>(da_n) * db_n, total);
    int at = 0;
    for (const Matrix &c : columns) {
        basis.middleCols(at, c.cols()) = c;
        at += static_cast<int>(c.cols());
    }
    out.test = TestOperator::projector(std::move(basis), layout);
    return out;
}

struct PinchedDecomposition::Impl {
    // A set of A strings coupled by nonzero blocks of the rotated state; the
    // pinched state is block diagonal over components.
    struct Component {
        std::vector<int> groups;   // indices into Cluster::a_strings
        std::vector<int> offsets;  // first row of each group inside the component
        Matrix eigenvectors;       // columns in descending eigenvalue order
        RealVector eigenvalues;
    };
    struct Cluster {
        double value = 0;
        std::vector<int> a_strings;        // distinct A strings, ascending
        std::vector<std::vector<int>> js;  // B^n eigenvector indices per A string
        std::vector<Component> components;
        // Outcome index within the cluster -> (component, column), by descending eigenvalue.
        std::vector<std::pair<int, int>> outcomes;
    };

    TestLayout layout;
    uint64_t g = 0;
    Matrix w_a;
    RealVector t;  // tau^(x)n eigenvalues per A string
    Matrix w_b;    // omega_n eigenvectors
    std::vector<Cluster> clusters;
    PinchedPair pair;

    // B^n basis vectors of A string i in cluster c.
    Matrix b_columns(const Cluster &c, int i) const {
        Matrix g_a(w_b.rows(), static_cast<int>(c.js[i].size()));
        for (size_t j = 0; j < c.js[i].size(); j++) {
            g_a.col(static_cast<int>(j)) = w_b.col(c.js[i][j]);
        }
        return g_a;
    }

    // Accepted columns per (cluster, component).
    std::vector<std::vector<std::vector<int>>> selection(double mu) const {
        std::vector<std::vector<std::vector<int>>> sel(clusters.size());
        for (size_t c = 0; c < clusters.size(); c++) {
            sel[c].resize(clusters[c].components.size());
            for (size_t k = 0; k < clusters[c].components.size(); k++) {
                const Component &comp = clusters[c].components[k];
                for (int i = 0; i < comp.eigenvalues.size(); i++) {
                    if (accepted(comp.eigenvalues(i), clusters[c].value, mu)) {
                        sel[c][k].push_back(i);
                    }
                }
            }
        }
        return sel;
    }

    static Matrix pick(const Matrix &m, int row0, int rows, const std::vector<int> &cols) {
        Matrix out(rows, static_cast<int>(cols.size()));
        for (size_t k = 0; k < cols.size(); k++) {
            out.col(static_cast<int>(k)) = m.block(row0, cols[k], rows, 1);
        }
        return out;
    }
};

PinchedDecomposition::PinchedDecomposition(const HypothesisInstance &inst, int n) : impl_(std::make_unique<Impl>()) {
    Impl &im = *impl_;
    im.layout = {n, inst.dim_a(), inst.dim_b()};
    check_layout(im.layout);
    im.g = universal_factor(inst, n);
    const UniversalState &u = cached_universal_state(n, inst.dim_b());
    const Spectrum ta = a_basis(inst.tau());
    im.w_a = ta.eigenvectors;
    im.t = product_spectrum(ta.eigenvalues, n);
    const Spectrum sb = u.omega.op().spectrum();
    im.w_b = sb.eigenvectors;
    const RotatedBlocks r = rotate(inst.rho(), im.w_a);

    const int da_n = im.layout.dim_a_n();
    const int db_n = im.layout.dim_b_n();
    // Eigenvalues of K, one per (A string, omega eigenvector).
    std::vector<std::pair<int, int>> members;
    std::vector<double> values;
    for (int a = 0; a < da_n; a++) {
        for (int j = 0; j < db_n; j++) {
            members.push_back({a, j});
            values.push_back(im.t(a) * sb.eigenvalues(j));
        }
    }
    std::vector<int> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return values[x] > values[y]; });
    RealVector sorted(static_cast<int>(order.size()));
    for (size_t i = 0; i < order.size(); i++) {
        sorted(static_cast<int>(i)) = values[order[i]];
    }

    std::vector<std::vector<int>> digits(da_n);
    for (int a = 0; a < da_n; a++) {
        digits_of(a, im.layout.dim_a, n, digits[a]);
    }
    for (const EigenCluster &ec : relative_clusters(sorted)) {
        Impl::Cluster cl;
        std::vector<std::pair<int, int>> mem;
        double sum = 0;
        for (int i = ec.begin; i < ec.end; i++) {
            mem.push_back(members[order[i]]);
            sum += values[order[i]];
        }
        cl.value = sum / ec.size();
        std::sort(mem.begin(), mem.end());
        for (const auto &[a, j] : mem) {
            if (cl.a_strings.empty() || cl.a_strings.back() != a) {
                cl.a_strings.push_back(a);
                cl.js.emplace_back();
            }
            cl.js.back().push_back(j);
        }
        const int groups = static_cast<int>(cl.a_strings.size());
        std::vector<Matrix> g_cols;
        for (int i = 0; i < groups; i++) {
            g_cols.push_back(im.b_columns(cl, i));
        }
        // Coupling blocks between A strings; empty where the rotated state vanishes.
        std::vector<std::vector<Matrix>> coupling(groups, std::vector<Matrix>(groups));
        std::vector<int> parent(groups);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
        for (int i = 0; i < groups; i++) {
            for (int k = i; k < groups; k++) {
                const Matrix rb = copy_block(r, digits[cl.a_strings[i]], digits[cl.a_strings[k]]);
                if (rb.size() == 0) {
                    continue;
                }
                coupling[i][k] = g_cols[i].adjoint() * rb * g_cols[k];
                parent[root(k)] = root(i);
            }
        }
        std::vector<int> comp_of(groups, -1);
        for (int i = 0; i < groups; i++) {
            const int rt = root(i);
            if (comp_of[rt] < 0) {
                comp_of[rt] = static_cast<int>(cl.components.size());
                cl.components.emplace_back();
            }
            comp_of[i] = comp_of[rt];
            Impl::Component &comp = cl.components[comp_of[i]];
            comp.offsets.push_back(comp.groups.empty() ? 0 : comp.offsets.back() + static_cast<int>(cl.js[comp.groups.back()].size()));
            comp.groups.push_back(i);
        }
        for (Impl::Component &comp : cl.components) {
            const int rows = comp.offsets.back() + static_cast<int>(cl.js[comp.groups.back()].size());
            Matrix block = Matrix::Zero(rows, rows);
            for (size_t x = 0; x < comp.groups.size(); x++) {
                for (size_t y = x; y < comp.groups.size(); y++) {
                    const Matrix &entry = coupling[comp.groups[x]][comp.groups[y]];
                    if (entry.size() == 0) {
                        continue;
                    }
                    block.block(comp.offsets[x], comp.offsets[y], entry.rows(), entry.cols()) = entry;
                    if (y != x) {
                        block.block(comp.offsets[y], comp.offsets[x], entry.cols(), entry.rows()) = entry.adjoint();
                    }
                }
            }
            Spectrum s = HermitianOperator(block).spectrum();
            comp.eigenvectors = std::move(s.eigenvectors);
            comp.eigenvalues = s.eigenvalues.cwiseMax(0.0);
        }
        for (int k = 0; k < static_cast<int>(cl.components.size()); k++) {
            for (int i = 0; i < cl.components[k].eigenvalues.size(); i++) {
                cl.outcomes.push_back({k, i});
            }
        }
        std::stable_sort(cl.outcomes.begin(), cl.outcomes.end(), [&](const auto &x, const auto &y) {
            return cl.components[x.first].eigenvalues(x.second) > cl.components[y.first].eigenvalues(y.second);
        });
        const int id = static_cast<int>(im.clusters.size());
        for (size_t i = 0; i < cl.outcomes.size(); i++) {
            im.pair.labels.push_back({id, static_cast<int>(i)});
            im.pair.p.push_back(cl.components[cl.outcomes[i].first].eigenvalues(cl.outcomes[i].second));
            im.pair.q.push_back(cl.value);
        }
        im.clusters.push_back(std::move(cl));
    }
    im.pair.n = n;
    const double total = std::accumulate(im.pair.p.begin(), im.pair.p.end(), 0.0);
    if (std::abs(total - 1) > kStateTolerance) {
        throw std::logic_error("PinchedDecomposition: pinched weights sum to " + format_number(total));
    }
}

PinchedDecomposition::~PinchedDecomposition() = default;
PinchedDecomposition::PinchedDecomposition(PinchedDecomposition &&) noexcept = default;
PinchedDecomposition &PinchedDecomposition::operator=(PinchedDecomposition &&) noexcept = default;

const PinchedPair &PinchedDecomposition::pair() const {
    return impl_->pair;
}

uint64_t PinchedDecomposition::g() const {
    return impl_->g;
}

int PinchedDecomposition::n() const {
    return impl_->layout.n;
}

int PinchedDecomposition::cluster_count() const {
    return static_cast<int>(impl_->clusters.size());
}

PinchedOutcome PinchedDecomposition::evaluate(double mu) const {
    const Impl &im = *impl_;
    PinchedOutcome out;
    out.mu = mu;
    out.g = im.g;
    const auto sel = im.selection(mu);
    const int db_n = im.layout.dim_b_n();
    Matrix m = Matrix::Zero(db_n, db_n);
    double kept = 0;
    for (size_t c = 0; c < im.clusters.size(); c++) {
        const Impl::Cluster &cl = im.clusters[c];
        for (size_t k = 0; k < cl.components.size(); k++) {
            const Impl::Component &comp = cl.components[k];
            if (sel[c][k].empty()) {
                continue;
            }
            for (int i : sel[c][k]) {
                kept += comp.eigenvalues(i);
                out.q_at_least += cl.value;
            }
            // tr_{A^n}[(tau^(x)n (x) 1) Q] restricted to this component.
            for (size_t x = 0; x < comp.groups.size(); x++) {
                const int grp = comp.groups[x];
                const Matrix coeff = Impl::pick(comp.eigenvectors, comp.offsets[x], static_cast<int>(cl.js[grp].size()), sel[c][k]);
                const Matrix ub = im.b_columns(cl, grp) * coeff;
                m.noalias() += im.t(cl.a_strings[grp]) * (ub * ub.adjoint());
            }
        }
    }
    out.alpha1 = std::clamp(1 - kept, 0.0, 1.0);
    out.p_below = out.alpha1;
    out.beta = std::max(0.0, max_eigenvalue(HermitianOperator(m)));
    return out;
}

TestOperator PinchedDecomposition::test(double mu) const {
    const Impl &im = *impl_;
    const auto sel = im.selection(mu);
    int total = 0;
    for (const auto &per_cluster : sel) {
        for (const auto &s : per_cluster) {
            total += static_cast<int>(s.size());
        }
    }
    const int db_n = im.layout.dim_b_n();
    Matrix basis = Matrix::Zero(im.layout.dim(), total);
    std::vector<int> a_digits;
    int at = 0;
    for (size_t c = 0; c < im.clusters.size(); c++) {
        const Impl::Cluster &cl = im.clusters[c];
        for (size_t k = 0; k < cl.components.size(); k++) {
            const Impl::Component &comp = cl.components[k];
            const int cols = static_cast<int>(sel[c][k].size());
            if (cols == 0) {
                continue;
            }
            for (size_t x = 0; x < comp.groups.size(); x++) {
                const int grp = comp.groups[x];
                digits_of(cl.a_strings[grp], im.layout.dim_a, im.layout.n, a_digits);
                const Matrix ea = kron_columns(im.w_a, a_digits);
                const Matrix coeff = Impl::pick(comp.eigenvectors, comp.offsets[x], static_cast<int>(cl.js[grp].size()), sel[c][k]);
                const Matrix ub = im.b_columns(cl, grp) * coeff;
                for (int row = 0; row < ea.rows(); row++) {
                    if (ea(row, 0) != Complex(0)) {
                        basis.block(static_cast<long long>(row) * db_n, at, db_n, cols) += ea(row, 0) * ub;
                    }
                }
            }
            at += cols;
        }
    }
    return TestOperator::projector(std::move(basis), im.layout);
}

PinchedTestResult pinched_test_and_distributions(const HypothesisInstance &inst, int n, double mu) {
    PinchedDecomposition dec(inst, n);
    return {dec.test(mu), dec.pair(), dec.evaluate(mu)};
}

double strong_converse_mu(const PinchedPair &pair, uint64_t g, double s, double rate) {
    if (!(s > 1)) {
        throw std::invalid_argument("strong_converse_mu: s must exceed 1");
    }
    const DivergenceValue d = classical_divergence(pair.p, pair.q, s);
    if (!d.finite()) {
        return kInf;
    }
    return (std::log(static_cast<double>(g)) + pair.n * rate + (s - 1) * d.value) / s;
}

double strong_converse_mu(const HypothesisInstance &inst, int n, double s, double rate) {
    PinchedDecomposition dec(inst, n);
    return strong_converse_mu(dec.pair(), dec.g(), s, rate);
}

const char *to_string(BoundKind kind) {
    switch (kind) {
        case BoundKind::kExact:
            return "Exact";
        case BoundKind::kLowerBound:
            return "LowerBound";
        case BoundKind::kAchievedByTest:
            return "AchievedByTest";
    }
    return "unknown";
}

namespace {

// {rho - c sigma > 0} with its type-II error tr[Q sigma] and acceptance tr[Q rho].
struct ProjectorPoint {
    Matrix basis;
    double beta = 0;
    double accept = 0;
};

ProjectorPoint positive_part(const DensityMatrix &rho, const DensityMatrix &sigma, double c) {
    const Spectrum s = (rho.op() - sigma.op() * c).spectrum();
    std::vector<int> keep;
    for (int i = 0; i < s.dim(); i++) {
        if (s.eigenvalues(i) > 0) {
            keep.push_back(i);
        }
    }
    ProjectorPoint pt;
    pt.basis = Matrix(rho.dim(), static_cast<int>(keep.size()));
    for (size_t k = 0; k < keep.size(); k++) {
        pt.basis.col(static_cast<int>(k)) = s.eigenvectors.col(keep[k]);
    }
    pt.beta = (pt.basis.adjoint() * sigma.matrix() * pt.basis).trace().real();
    pt.accept = (pt.basis.adjoint() * rho.matrix() * pt.basis).trace().real();
    return pt;
}

}  // namespace

TradeoffRecord simple_np_tradeoff(const DensityMatrix &rho, const DensityMatrix &sigma, double mu) {
    if (rho.dim() != sigma.dim()) {
        throw std::invalid_argument("simple_np_tradeoff: dimension mismatch");
    }
    const TestLayout layout{1, rho.dim(), 1};
    const double budget = std::exp(mu);
    TradeoffRecord rec;
    rec.mu = mu;
    rec.bound_kind = BoundKind::kExact;
    if (budget >= 1) {
        rec.alpha1 = 0;
        rec.beta = 1;
        rec.test = std::make_shared<const TestOperator>(TestOperator::identity(layout));
        return rec;
    }
    // beta(c) = tr[{rho > c sigma} sigma] is nonincreasing in c; bracket the
    // crossing of the budget in log c and mix the two sides.
    auto at = [&](double t) { return positive_part(rho, sigma, std::exp(t)); };
    double t_lo = -1;
    ProjectorPoint lo = at(t_lo);
    while (lo.beta <= budget && t_lo > -700) {
        t_lo = std::max(-700.0, 2 * t_lo);
        lo = at(t_lo);
    }
    double t_hi = 1;
    ProjectorPoint hi = at(t_hi);
    while (hi.beta > budget && t_hi < 700) {
        t_hi = std::min(700.0, 2 * t_hi);
        hi = at(t_hi);
    }
    if (lo.beta <= budget) {
        hi = lo;
    } else {
        for (;;) {
            const double mid = 0.5 * (t_lo + t_hi);
            if (mid <= t_lo || mid >= t_hi) {
                break;
            }
            ProjectorPoint pm = at(mid);
            if (pm.beta > budget) {
                t_lo = mid;
                lo = std::move(pm);
            } else {
                t_hi = mid;
                hi = std::move(pm);
            }
        }
    }
    const double gamma = lo.beta > hi.beta && lo.beta > budget ? (budget - hi.beta) / (lo.beta - hi.beta) : 0.0;
    const Matrix q_hi = hi.basis * hi.basis.adjoint();
    const Matrix q_lo = lo.basis * lo.basis.adjoint();
    const HermitianOperator q(Matrix((1 - gamma) * q_hi + gamma * q_lo));
    rec.beta = (1 - gamma) * hi.beta + gamma * lo.beta;
    rec.alpha1 = std::clamp(1 - ((1 - gamma) * hi.accept + gamma * lo.accept), 0.0, 1.0);
    rec.test = std::make_shared<const TestOperator>(TestOperator::general(q, layout));
    return rec;
}

ClassicalTradeoff classical_np_tradeoff(std::span<const double> p, std::span<const double> q, double mu) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("classical_np_tradeoff: length mismatch");
    }
    const double budget = std::exp(mu);
    std::vector<size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    // Descending likelihood ratio p/q by cross multiplication; q = 0 atoms lead.
    auto ratio_greater = [&](size_t x, size_t y) { return p[x] * q[y] > p[y] * q[x]; };
    std::stable_sort(order.begin(), order.end(), ratio_greater);
    auto tied = [&](size_t x, size_t y) {
        const double lhs = p[x] * q[y];
        const double rhs = p[y] * q[x];
        return std::abs(lhs - rhs) <= 1e-12 * std::max(lhs, rhs);
    };
    ClassicalTradeoff out;
    double kept = 0;
    for (size_t i = 0; i < order.size();) {
        size_t j = i;
        double gp = 0;
        double gq = 0;
        while (j < order.size() && tied(order[i], order[j])) {
            gp += p[order[j]];
            gq += q[order[j]];
            j++;
        }
        if (out.beta + gq <= budget) {
            out.beta += gq;
            kept += gp;
        } else {
            const double frac = (budget - out.beta) / gq;
            kept += frac * gp;
            out.beta = budget;
            break;
        }
        i = j;
    }
    out.alpha1 = std::clamp(1 - kept, 0.0, 1.0);
    return out;
}

ClassicalAtoms iid_type_atoms(std::span<const double> p, std::span<const double> q, int n) {
    if (p.size() != q.size() || p.empty()) {
        throw std::invalid_argument("iid_type_atoms: p and q need the same nonzero length");
    }
    if (n < 1) {
        throw std::invalid_argument("iid_type_atoms: n must be positive");
    }
    const int k = static_cast<int>(p.size());
    // C(n + k - 1, k - 1) types.
    double types = 1;
    for (int i = 1; i < k; i++) {
        types = types * (n + i) / i;
    }
    if (types > 1e7) {
        throw std::length_error("iid_type_atoms: more than 10^7 types");
    }
    ClassicalAtoms out;
    std::vector<int> counts(k, 0);
    // log of multinomial mass; zero probabilities with a positive count give zero mass.
    auto log_mass = [&](std::span<const double> probs) {
        double acc = std::lgamma(n + 1.0);
        for (int i = 0; i < k; i++) {
            acc -= std::lgamma(counts[i] + 1.0);
            if (counts[i] > 0) {
                if (!(probs[i] > 0)) {
                    return -kInf;
                }
                acc += counts[i] * std::log(probs[i]);
            }
        }
        return acc;
    };
    std::function<void(int, int)> rec = [&](int i, int remaining) {
        if (i == k - 1) {
            counts[i] = remaining;
            out.p.push_back(std::exp(log_mass(p)));
            out.q.push_back(std::exp(log_mass(q)));
            return;
        }
        for (int c = remaining; c >= 0; c--) {
            counts[i] = c;
            rec(i + 1, remaining - c);
        }
    };
    rec(0, n);
    return out;
}

CumulantValue classical_cumulant(const PinchedPair &pair, double t) {
    if (!(t >= -0.5)) {
        throw std::invalid_argument("classical_cumulant: t must be at least -1/2");
    }
    if (pair.p.size() != pair.q.size()) {
        throw std::invalid_argument("classical_cumulant: length mismatch");
    }
    std::vector<double> terms;
    for (size_t i = 0; i < pair.p.size(); i++) {
        const double p = pair.p[i];
        const double q = pair.q[i];
        if (!(p > 0)) {
            continue;
        }
        if (!(q > 0)) {
            if (t > 0) {
                return {kInf, true};
            }
            if (t < 0) {
                continue;
            }
            terms.push_back(std::log(p));
            continue;
        }
        terms.push_back((1 + t) * std::log(p) - t * std::log(q));
    }
    if (terms.empty()) {
        return {-kInf, false};
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    double sum = 0;
    for (double x : terms) {
        sum += std::exp(x - top);
    }
    return {(top + std::log(sum)) / pair.n, false};
}

std::string tradeoff_csv(std::span<const TradeoffRow> rows) {
    std::string out = "n,mu,alpha1,beta,bound_kind\n";
    for (const TradeoffRow &row : rows) {
        out += std::to_string(row.n) + "," + format_number(row.record.mu) + "," + format_number(row.record.alpha1) + "," +
               format_number(row.record.beta) + "," + to_string(row.record.bound_kind) + "\n";
    }
    return out;
}

}  // namespace qrmi
