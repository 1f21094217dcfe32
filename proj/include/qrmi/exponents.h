#ifndef QRMI_EXPONENTS_H
#define QRMI_EXPONENTS_H

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrmi/mutual_info.h"

namespace qrmi {

enum class ExponentRegime {
    kBelowI,
    kAtI,
    kAboveI,
    kBelowI0Divergent,
    kAboveITildeInf,
};
const char *to_string(ExponentRegime regime);

/// One point of an exponent curve. value is +infinity exactly when the regime
/// is kBelowI0Divergent and 0 whenever the regime is kAtI.
struct ExponentRecord {
    double rate = 0;    ///< R, nats
    double value = 0;   ///< exponent, nats
    double s_star = 0;  ///< optimizer; +infinity for the s -> infinity limit, 0 for s -> 0
    bool at_boundary = false;  ///< s_star sits on an end of the search interval
    ExponentRegime regime = ExponentRegime::kBelowI;
};

inline constexpr double kHoeffdingSMin = 1e-3;
inline constexpr double kHoeffdingSMax = 1 - 1e-3;
inline constexpr double kConverseSMin = 1 + 1e-3;
inline constexpr double kConverseSMax = 40;
inline constexpr int kExponentGridPoints = 200;
inline constexpr double kExponentSTolerance = 1e-8;
/// |R - I| below this counts as R = I.
inline constexpr double kRateBoundaryTolerance = 1e-6;

/// Thrown when an information quantity feeding an exponent did not converge.
class ExponentError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Caches the s-grids of Petz I_s on [1e-3, 1 - 1e-3] and sandwiched I~_s on
/// [1 + 1e-3, 40] so that a sweep over R reuses them. Immutable after
/// construction and safe to share between threads.
class ExponentSolver {
   public:
    explicit ExponentSolver(const HypothesisInstance &inst);

    /// sup_{0<s<1} ((1-s)/s)(I_s - R).
    ExponentRecord hoeffding(double rate) const;
    /// sup_{s>1} ((s-1)/s)(R - I~_s).
    ExponentRecord strong_converse(double rate) const;

    double mutual_information() const {
        return info_;
    }
    double variance() const {
        return variance_;
    }
    /// I~_infinity.
    double max_information() const {
        return info_inf_;
    }

   private:
    double petz(double s) const;
    double sandwiched(double s) const;

    HypothesisInstance inst_;
    double info_ = 0;
    double variance_ = 0;
    double info_inf_ = 0;
    std::vector<double> hoeffding_s_;
    std::vector<double> petz_values_;
    std::vector<double> converse_s_;
    std::vector<double> sandwiched_values_;
};

ExponentRecord hoeffding_exponent(const HypothesisInstance &inst, double rate);
ExponentRecord strong_converse_exponent(const HypothesisInstance &inst, double rate);

struct SecondOrderValue {
    double value = 0;
    bool degenerate = false;  ///< V = 0: the step function replaces Phi
};
/// Phi(r / sqrt V) with V the information variance, via erfc.
SecondOrderValue second_order_prediction(const HypothesisInstance &inst, double r);
/// Phi(r / sqrt v) for a given variance, with the V = 0 step function.
SecondOrderValue gaussian_limit(double r, double variance);

struct SaddleGap {
    double gap = 0;       ///< min_sigma max_s F - max_s min_sigma F on the grid
    double minimax = 0;
    double maximin = 0;
    /// max_s (min over the sigma grid - exact infimum over all sigma): how far
    /// the sigma grid is from the true inner minimum.
    double discretization = 0;
};
/// F(s, sigma) = ((1-s)/s)(D_s(rho || tau (x) sigma) - R) with Petz D_s on
/// the given s values in (0, 1) and `sigma_grid_size` states sigma_B: rho_B
/// first, then a Bloch-ball lattice for qubits or seeded random states otherwise.
SaddleGap saddle_gap(const HypothesisInstance &inst, double rate, std::span<const double> s_grid, int sigma_grid_size);

/// CSV rows `R,value,s_star,regime` with 17 significant digits.
std::string exponent_csv(std::span<const ExponentRecord> records);

}  // namespace qrmi

#endif  // QRMI_EXPONENTS_H
