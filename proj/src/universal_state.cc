#include "qrmi/universal_state.h"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "qrmi/divergence.h"

namespace qrmi {

namespace {

uint64_t checked_mul(uint64_t a, uint64_t b) {
    if (a != 0 && b > std::numeric_limits<uint64_t>::max() / a) {
        throw std::overflow_error("sym_dim: result exceeds 64 bits");
    }
    return a * b;
}

uint64_t factorial(int n) {
    uint64_t f = 1;
    for (int k = 2; k <= n; k++) {
        f = checked_mul(f, static_cast<uint64_t>(k));
    }
    return f;
}

void partitions(int remaining, int largest, std::vector<int> &prefix, std::vector<std::vector<int>> &out) {
    if (remaining == 0) {
        out.push_back(prefix);
        return;
    }
    for (int part = std::min(remaining, largest); part >= 1; part--) {
        prefix.push_back(part);
        partitions(remaining - part, part, prefix, out);
        prefix.pop_back();
    }
}

// Cycle lengths of a permutation, descending.
std::vector<int> cycle_type(const std::vector<int> &perm) {
    std::vector<int> lengths;
    std::vector<bool> seen(perm.size(), false);
    for (size_t start = 0; start < perm.size(); start++) {
        if (seen[start]) {
            continue;
        }
        int len = 0;
        for (size_t k = start; !seen[k]; k = static_cast<size_t>(perm[k])) {
            seen[k] = true;
            len++;
        }
        lengths.push_back(len);
    }
    std::sort(lengths.rbegin(), lengths.rend());
    return lengths;
}

int ipow(int base, int exp) {
    int r = 1;
    for (int k = 0; k < exp; k++) {
        r *= base;
    }
    return r;
}

}  // namespace

uint64_t sym_dim(int n, int d) {
    if (n < 1 || d < 1) {
        throw std::invalid_argument("sym_dim: n and d must be positive");
    }
    // C(n + k, n) with k = d^2 - 1, built as a product of exact binomials.
    const uint64_t k = checked_mul(static_cast<uint64_t>(d), static_cast<uint64_t>(d)) - 1;
    uint64_t result = 1;
    for (uint64_t i = 1; i <= static_cast<uint64_t>(n); i++) {
        // result = C(k + i - 1, i - 1); C(k + i, i) = C(k + i - 1, i - 1) (k + i) / i.
        const uint64_t g = std::gcd(result, i);
        const uint64_t num = k + i;
        const uint64_t g2 = std::gcd(num, i / g);
        result = checked_mul(result / g, num / g2);
        // The remaining divisor is 1 because the binomial is an integer and
        // gcd(result / g, i / g) = 1.
        if ((i / g) / g2 != 1) {
            throw std::logic_error("sym_dim: inexact division");
        }
    }
    return result;
}

std::vector<CycleClass> cycle_classes(int n) {
    if (n < 1) {
        throw std::invalid_argument("cycle_classes: n must be positive");
    }
    std::vector<std::vector<int>> parts;
    std::vector<int> prefix;
    partitions(n, n, prefix, parts);
    const uint64_t nfact = factorial(n);
    std::vector<CycleClass> out;
    for (auto &p : parts) {
        // |C_lambda| = n! / prod_k (k^{m_k} m_k!).
        uint64_t z = 1;
        for (size_t i = 0; i < p.size();) {
            size_t j = i;
            while (j < p.size() && p[j] == p[i]) {
                j++;
            }
            const int m = static_cast<int>(j - i);
            z = checked_mul(z, checked_mul(static_cast<uint64_t>(ipow(p[i], m)), factorial(m)));
            i = j;
        }
        out.push_back({std::move(p), nfact / z});
    }
    return out;
}

UniversalState universal_state(int n, int d) {
    if (n < 1 || d < 1) {
        throw std::invalid_argument("universal_state: n and d must be positive");
    }
    if (n > kMaxUniversalCopies || d > kMaxUniversalLocalDim) {
        throw std::length_error("universal_state: (n, d) = (" + std::to_string(n) + ", " + std::to_string(d) + ") exceeds n <= 7, d <= 3");
    }
    UniversalState u;
    u.n = n;
    u.d = d;
    u.g = sym_dim(n, d);
    // The coefficient d^{#cycles} is a class function: one weight per cycle type.
    std::map<std::vector<int>, double> weight;
    const double norm = static_cast<double>(u.g) * static_cast<double>(factorial(n));
    for (const CycleClass &c : cycle_classes(n)) {
        weight[c.parts] = ipow(d, static_cast<int>(c.parts.size())) / norm;
    }
    const int dim = ipow(d, n);
    std::vector<int> stride(n);
    for (int k = 0; k < n; k++) {
        stride[k] = ipow(d, n - 1 - k);
    }
    Matrix omega = Matrix::Zero(dim, dim);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> digits(n);
    do {
        const double w = weight.at(cycle_type(perm));
        // U(pi)|x_1 ... x_n> = |x_{pi(1)} ... x_{pi(n)}>.
        for (int x = 0; x < dim; x++) {
            for (int k = 0, rest = x; k < n; k++) {
                digits[k] = rest / stride[k];
                rest %= stride[k];
            }
            int y = 0;
            for (int k = 0; k < n; k++) {
                y += digits[perm[k]] * stride[k];
            }
            omega(y, x) += w;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    // A positive combination of a group's representation sum: positive by construction.
    u.omega = DensityMatrix::trusted(HermitianOperator(omega));
    return u;
}

const UniversalState &cached_universal_state(int n, int d) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<const UniversalState>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto &slot = cache[{n, d}];
    if (!slot) {
        slot = std::make_unique<const UniversalState>(universal_state(n, d));
    }
    return *slot;
}

double permutation_defect(const HermitianOperator &m, int d, int n) {
    if (ipow(d, n) != m.dim()) {
        throw std::invalid_argument("permutation_defect: dimension is not d^n");
    }
    std::vector<int> dims(n, d);
    std::vector<int> perm(n);
    double defect = 0;
    for (int k = 0; k + 1 < n; k++) {
        std::iota(perm.begin(), perm.end(), 0);
        std::swap(perm[k], perm[k + 1]);
        const Matrix moved = permute_subsystems_matrix(m.matrix(), dims, perm);
        defect = std::max(defect, (moved - m.matrix()).cwiseAbs().maxCoeff());
    }
    return defect;
}

double domination_gap(const DensityMatrix &tau, const UniversalState &u) {
    if (tau.dim() != u.omega.dim()) {
        throw std::invalid_argument("domination_gap: tau dimension does not match omega");
    }
    if (permutation_defect(tau.op(), u.d, u.n) > kPermutationInvarianceTolerance) {
        throw std::invalid_argument("domination_gap: tau is not permutation invariant");
    }
    return min_eigenvalue(u.omega.op() * static_cast<double>(u.g) - tau.op());
}

int block_count(const UniversalState &u) {
    return static_cast<int>(eigen_clusters(u.omega.op().spectrum().eigenvalues).size());
}

}  // namespace qrmi
