#include "qrmi/builtins.h"

#include <cmath>
#include <stdexcept>

namespace qrmi {

BipartiteState builtin_state(const std::string &name) {
    if (name == "bell") {
        Vector psi = Vector::Zero(4);
        psi(0) = psi(3) = 1;
        return {DensityMatrix::pure(psi), 2, 2};
    }
    if (name == "correlated-bits") {
        return {DensityMatrix::diagonal({0.5, 0, 0, 0.5}), 2, 2};
    }
    if (name == "product") {
        return {DensityMatrix::diagonal({0.25, 0.5, 1.0 / 12, 1.0 / 6}), 2, 2};
    }
    const std::string prefix = "werner:";
    if (name.rfind(prefix, 0) == 0) {
        const std::string arg = name.substr(prefix.size());
        size_t used = 0;
        double p = 0;
        try {
            p = std::stod(arg, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used == 0 || used != arg.size() || !(p >= 0 && p <= 1)) {
            throw std::invalid_argument("werner:p needs a number p in [0, 1], got '" + arg + "'");
        }
        Vector singlet = Vector::Zero(4);
        singlet(1) = 1 / std::sqrt(2.0);
        singlet(2) = -1 / std::sqrt(2.0);
        const Matrix m = p * singlet * singlet.adjoint() + (1 - p) / 4 * Matrix::Identity(4, 4);
        return {DensityMatrix(HermitianOperator(m)), 2, 2};
    }
    throw std::invalid_argument("unknown builtin state '" + name + "'");
}

std::vector<std::string> builtin_names() {
    return {"bell", "correlated-bits", "product", "werner:p"};
}

}  // namespace qrmi
