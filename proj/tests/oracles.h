// Reference computations used only by tests. They deliberately avoid the
// library's spectral helpers so that agreement is meaningful.
#ifndef QRMI_TESTS_ORACLES_H
#define QRMI_TESTS_ORACLES_H

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "qrmi/operator.h"

namespace qrmi::oracle {

/// Principal power of a positive definite matrix via Schur-Pade.
inline Matrix power(const Matrix &m, double p) {
    return m.pow(p);
}

/// Sandwiched Renyi divergence for full-rank sigma, alpha != 1.
inline double sandwiched(const Matrix &rho, const Matrix &sigma, double alpha) {
    const Matrix s = power(sigma, (1 - alpha) / (2 * alpha));
    Matrix y = s * rho * s;
    y = (y + y.adjoint()) / 2;
    return std::log(power(y, alpha).trace().real()) / (alpha - 1);
}

/// Petz Renyi divergence for full-rank rho and sigma, alpha != 1.
inline double petz(const Matrix &rho, const Matrix &sigma, double alpha) {
    return std::log((power(rho, alpha) * power(sigma, 1 - alpha)).trace().real()) / (alpha - 1);
}

using Bloch = std::array<double, 3>;

inline Matrix bloch_state(const Bloch &r) {
    Matrix m(2, 2);
    m << Complex(1 + r[2], 0), Complex(r[0], -r[1]), Complex(r[0], r[1]), Complex(1 - r[2], 0);
    return m / 2;
}

/// Minimizes f over the Bloch ball: `shells` radii times a Fibonacci sphere of
/// `directions` points (plus the center), then Nelder-Mead from the best point.
inline double bloch_minimum(const std::function<double(const Bloch &)> &f, int shells, int directions) {
    const double golden = M_PI * (3 - std::sqrt(5.0));
    const double rmax = 1 - 1e-9;
    Bloch best = {0, 0, 0};
    double fbest = f(best);
    for (int k = 1; k <= shells; k++) {
        const double r = rmax * k / shells;
        for (int j = 0; j < directions; j++) {
            const double z = 1 - 2 * (j + 0.5) / directions;
            const double rho = std::sqrt(1 - z * z);
            const double phi = golden * j;
            Bloch p = {r * rho * std::cos(phi), r * rho * std::sin(phi), r * z};
            double v = f(p);
            if (v < fbest) {
                fbest = v;
                best = p;
            }
        }
    }
    auto clamped = [&](Bloch p) {
        double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        if (n > rmax) {
            for (double &c : p) {
                c *= rmax / n;
            }
        }
        return f(p);
    };
    std::array<Bloch, 4> simplex;
    std::array<double, 4> values;
    double step = 2.0 / shells;
    for (int restart = 0; restart < 6; restart++) {
        simplex[0] = best;
        for (int i = 0; i < 3; i++) {
            simplex[i + 1] = best;
            simplex[i + 1][i] += step;
        }
        for (int i = 0; i < 4; i++) {
            values[i] = clamped(simplex[i]);
        }
        for (int it = 0; it < 4000; it++) {
            std::array<int, 4> order = {0, 1, 2, 3};
            std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
            std::array<Bloch, 4> s2;
            std::array<double, 4> v2;
            for (int i = 0; i < 4; i++) {
                s2[i] = simplex[order[i]];
                v2[i] = values[order[i]];
            }
            simplex = s2;
            values = v2;
            if (values[3] - values[0] < 1e-15) {
                break;
            }
            Bloch centroid = {0, 0, 0};
            for (int i = 0; i < 3; i++) {
                for (int c = 0; c < 3; c++) {
                    centroid[c] += simplex[i][c] / 3;
                }
            }
            auto along = [&](double t) {
                Bloch p;
                for (int c = 0; c < 3; c++) {
                    p[c] = centroid[c] + t * (simplex[3][c] - centroid[c]);
                }
                return p;
            };
            Bloch reflected = along(-1);
            double fr = clamped(reflected);
            if (fr < values[0]) {
                Bloch expanded = along(-2);
                double fe = clamped(expanded);
                if (fe < fr) {
                    simplex[3] = expanded;
                    values[3] = fe;
                } else {
                    simplex[3] = reflected;
                    values[3] = fr;
                }
            } else if (fr < values[2]) {
                simplex[3] = reflected;
                values[3] = fr;
            } else {
                Bloch contracted = along(0.5);
                double fc = clamped(contracted);
                if (fc < values[3]) {
                    simplex[3] = contracted;
                    values[3] = fc;
                } else {
                    for (int i = 1; i < 4; i++) {
                        for (int c = 0; c < 3; c++) {
                            simplex[i][c] = simplex[0][c] + 0.5 * (simplex[i][c] - simplex[0][c]);
                        }
                        values[i] = clamped(simplex[i]);
                    }
                }
            }
        }
        int arg = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
        best = simplex[arg];
        double n = std::sqrt(best[0] * best[0] + best[1] * best[1] + best[2] * best[2]);
        if (n > rmax) {
            for (double &c : best) {
                c *= rmax / n;
            }
        }
        fbest = std::min(fbest, values[arg]);
        step /= 10;
    }
    return fbest;
}

}  // namespace qrmi::oracle

#endif  // QRMI_TESTS_ORACLES_H
