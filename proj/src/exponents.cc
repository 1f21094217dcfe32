#include "qrmi/exponents.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "qrmi/divergence.h"
#include "qrmi/io.h"
#include "qrmi/random.h"

namespace qrmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// R must undercut I_0 by this much before the Hoeffding exponent is declared infinite.
constexpr double kDivergenceMargin = 1e-9;
constexpr uint64_t kSigmaGridSeed = 0x5eed;

struct Argmax {
    double s = 0;
    double value = -kInf;
};

// Golden-section maximization of a unimodal f on [a, b] to width tol.
Argmax golden_max(const std::function<double(double)> &f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1) / 2;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Argmax{c, fc} : Argmax{d, fd};
}

// Grid maximum refined by golden section inside the neighbouring cells.
Argmax refine(const std::vector<double> &s, const std::vector<double> &values, const std::function<double(double)> &f, size_t &best) {
    best = static_cast<size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    const size_t lo = best == 0 ? 0 : best - 1;
    const size_t hi = std::min(best + 1, s.size() - 1);
    Argmax g = golden_max(f, s[lo], s[hi], kExponentSTolerance);
    if (values[best] >= g.value) {
        g = {s[best], values[best]};
    }
    return g;
}

double checked_value(const MIResult &r, const char *what, double s) {
    if (!r.converged) {
        throw ExponentError(std::string(what) + " did not converge at s = " + format_number(s));
    }
    return r.value;
}

std::vector<DensityMatrix> sigma_grid(const HypothesisInstance &inst, int size) {
    std::vector<DensityMatrix> out;
    out.push_back(inst.rho().marginal_b());
    const int rest = size - 1;
    if (rest <= 0) {
        return out;
    }
    if (inst.dim_b() == 1) {
        for (int i = 0; i < rest; i++) {
            out.push_back(DensityMatrix::maximally_mixed(1));
        }
        return out;
    }
    if (inst.dim_b() == 2) {
        const int shells = std::max(1, static_cast<int>(std::lround(std::cbrt(rest / 20.0))));
        const int directions = (rest + shells - 1) / shells;
        const double golden = M_PI * (3 - std::sqrt(5.0));
        for (int k = 0; k < shells && static_cast<int>(out.size()) < size; k++) {
            const double radius = 0.999 * (k + 1) / shells;
            for (int i = 0; i < directions && static_cast<int>(out.size()) < size; i++) {
                const double z = 1 - 2 * (i + 0.5) / directions;
                const double rxy = std::sqrt(std::max(0.0, 1 - z * z));
                const double phi = golden * i;
                const double x = radius * rxy * std::cos(phi);
                const double y = radius * rxy * std::sin(phi);
                Matrix m(2, 2);
                m << Complex(1 + radius * z, 0), Complex(x, -y), Complex(x, y), Complex(1 - radius * z, 0);
                out.push_back(DensityMatrix::trusted(HermitianOperator(Matrix(m / 2))));
            }
        }
        return out;
    }
    Rng rng(kSigmaGridSeed);
    for (int i = 0; i < rest; i++) {
        out.push_back(random_state(inst.dim_b(), rng));
    }
    return out;
}

}  // namespace

const char *to_string(ExponentRegime regime) {
    switch (regime) {
        case ExponentRegime::kBelowI:
            return "BelowI";
        case ExponentRegime::kAtI:
            return "AtI";
        case ExponentRegime::kAboveI:
            return "AboveI";
        case ExponentRegime::kBelowI0Divergent:
            return "BelowI0_Divergent";
        case ExponentRegime::kAboveITildeInf:
            return "AboveITildeInf";
    }
    return "unknown";
}

ExponentSolver::ExponentSolver(const HypothesisInstance &inst) : inst_(inst) {
    const RelativeEntropyVariance dv = mi_variance(inst_);
    if (dv.support_violation) {
        throw ExponentError("mutual information is infinite for this instance");
    }
    info_ = dv.d;
    variance_ = dv.v;
    info_inf_ = checked_value(sandwiched_mi(inst_, AlphaParam::infinity()), "sandwiched I_infinity", kInf);
    for (int i = 0; i < kExponentGridPoints; i++) {
        const double s = kHoeffdingSMin + (kHoeffdingSMax - kHoeffdingSMin) * i / (kExponentGridPoints - 1);
        hoeffding_s_.push_back(s);
        petz_values_.push_back(petz(s));
    }
    // Geometric in s - 1: the objective varies fastest just above s = 1.
    const double lo = kConverseSMin - 1;
    const double hi = kConverseSMax - 1;
    for (int i = 0; i < kExponentGridPoints; i++) {
        const double s = 1 + lo * std::pow(hi / lo, static_cast<double>(i) / (kExponentGridPoints - 1));
        converse_s_.push_back(i == kExponentGridPoints - 1 ? kConverseSMax : s);
        sandwiched_values_.push_back(sandwiched(converse_s_.back()));
    }
}

double ExponentSolver::petz(double s) const {
    return checked_value(petz_mi(inst_, s), "Petz I_s", s);
}

double ExponentSolver::sandwiched(double s) const {
    return checked_value(sandwiched_mi(inst_, s), "sandwiched I_s", s);
}

ExponentRecord ExponentSolver::hoeffding(double rate) const {
    if (!(rate > 0)) {
        throw std::invalid_argument("hoeffding exponent needs R > 0");
    }
    ExponentRecord rec;
    rec.rate = rate;
    if (rate >= info_ - kRateBoundaryTolerance) {
        rec.regime = std::abs(rate - info_) <= kRateBoundaryTolerance ? ExponentRegime::kAtI : ExponentRegime::kAboveI;
        rec.value = 0;
        rec.s_star = 1;
        rec.at_boundary = true;
        return rec;
    }
    rec.regime = ExponentRegime::kBelowI;
    auto f = [&](double s) { return (1 - s) / s * (petz(s) - rate); };
    std::vector<double> values(hoeffding_s_.size());
    for (size_t i = 0; i < values.size(); i++) {
        values[i] = (1 - hoeffding_s_[i]) / hoeffding_s_[i] * (petz_values_[i] - rate);
    }
    size_t best = 0;
    const Argmax g = refine(hoeffding_s_, values, f, best);
    if (best == 0 && rate < checked_value(petz_mi(inst_, 0), "Petz I_0", 0) - kDivergenceMargin) {
        rec.regime = ExponentRegime::kBelowI0Divergent;
        rec.value = kInf;
        rec.s_star = 0;
        rec.at_boundary = true;
        return rec;
    }
    if (g.value <= 0) {
        // The supremum is the s -> 1 limit 0 (R within grid resolution of I).
        rec.value = 0;
        rec.s_star = 1;
        rec.at_boundary = true;
        return rec;
    }
    rec.value = g.value;
    rec.s_star = g.s;
    rec.at_boundary = g.s - kHoeffdingSMin <= kExponentSTolerance || kHoeffdingSMax - g.s <= kExponentSTolerance;
    return rec;
}

ExponentRecord ExponentSolver::strong_converse(double rate) const {
    if (!(rate > 0)) {
        throw std::invalid_argument("strong converse exponent needs R > 0");
    }
    ExponentRecord rec;
    rec.rate = rate;
    if (rate <= info_ + kRateBoundaryTolerance) {
        rec.regime = std::abs(rate - info_) <= kRateBoundaryTolerance ? ExponentRegime::kAtI : ExponentRegime::kBelowI;
        rec.value = 0;
        rec.s_star = 1;
        rec.at_boundary = true;
        return rec;
    }
    rec.regime = rate > info_inf_ ? ExponentRegime::kAboveITildeInf : ExponentRegime::kAboveI;
    auto f = [&](double s) { return (s - 1) / s * (rate - sandwiched(s)); };
    std::vector<double> values(converse_s_.size());
    for (size_t i = 0; i < values.size(); i++) {
        values[i] = (converse_s_[i] - 1) / converse_s_[i] * (rate - sandwiched_values_[i]);
    }
    size_t best = 0;
    const Argmax g = refine(converse_s_, values, f, best);
    if (best + 1 == converse_s_.size()) {
        // Still increasing at s = 40: compare with the s -> infinity limit.
        const double limit = rate - info_inf_;
        rec.at_boundary = true;
        if (limit >= g.value) {
            rec.value = limit;
            rec.s_star = kInf;
        } else {
            rec.value = g.value;
            rec.s_star = g.s;
        }
        return rec;
    }
    if (g.value <= 0) {
        rec.value = 0;
        rec.s_star = 1;
        rec.at_boundary = true;
        return rec;
    }
    rec.value = g.value;
    rec.s_star = g.s;
    rec.at_boundary = g.s - kConverseSMin <= kExponentSTolerance;
    return rec;
}

ExponentRecord hoeffding_exponent(const HypothesisInstance &inst, double rate) {
    return ExponentSolver(inst).hoeffding(rate);
}

ExponentRecord strong_converse_exponent(const HypothesisInstance &inst, double rate) {
    return ExponentSolver(inst).strong_converse(rate);
}

SecondOrderValue gaussian_limit(double r, double variance) {
    if (!(variance > 1e-12)) {
        return {r < 0 ? 0.0 : (r == 0 ? 0.5 : 1.0), true};
    }
    return {0.5 * std::erfc(-r / std::sqrt(2 * variance)), false};
}

SecondOrderValue second_order_prediction(const HypothesisInstance &inst, double r) {
    const RelativeEntropyVariance dv = mi_variance(inst);
    if (dv.support_violation) {
        throw ExponentError("information variance is undefined for this instance");
    }
    return gaussian_limit(r, dv.v);
}

SaddleGap saddle_gap(const HypothesisInstance &inst, double rate, std::span<const double> s_grid, int sigma_grid_size) {
    if (s_grid.empty() || sigma_grid_size < 1) {
        throw std::invalid_argument("saddle_gap: grids must be nonempty");
    }
    for (double s : s_grid) {
        if (!(s > 0 && s < 1)) {
            throw std::invalid_argument("saddle_gap: s values must lie in (0, 1)");
        }
    }
    const std::vector<DensityMatrix> sigmas = sigma_grid(inst, sigma_grid_size);
    const size_t ns = s_grid.size();
    std::vector<double> row_min(ns, kInf);
    std::vector<double> col_max(sigmas.size(), -kInf);
    SaddleGap out;
    for (size_t i = 0; i < ns; i++) {
        const double s = s_grid[i];
        const double w = (1 - s) / s;
        for (size_t j = 0; j < sigmas.size(); j++) {
            const DivergenceValue d = divergence(DivergenceKind::kPetz, inst.rho().state(), inst.reference(sigmas[j].op()), s);
            const double f = d.finite() ? w * (d.value - rate) : kInf;
            row_min[i] = std::min(row_min[i], f);
            col_max[j] = std::max(col_max[j], f);
        }
        const double exact = w * (petz_mi(inst, s).value - rate);
        out.discretization = std::max(out.discretization, row_min[i] - exact);
    }
    out.maximin = *std::max_element(row_min.begin(), row_min.end());
    out.minimax = *std::min_element(col_max.begin(), col_max.end());
    out.gap = std::max(0.0, out.minimax - out.maximin);
    return out;
}

std::string exponent_csv(std::span<const ExponentRecord> records) {
    std::string out = "R,value,s_star,regime\n";
    for (const ExponentRecord &r : records) {
        out += format_number(r.rate) + "," + format_number(r.value) + "," + format_number(r.s_star) + "," + to_string(r.regime) + "\n";
    }
    return out;
}

}  // namespace qrmi
