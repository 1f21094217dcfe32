#ifndef QRMI_BUILTINS_H
#define QRMI_BUILTINS_H

#include <string>
#include <vector>

#include "qrmi/operator.h"

namespace qrmi {

/// Named two-qubit states with exact rational entries:
///   bell             (|00> + |11>)/sqrt 2
///   correlated-bits  (|00><00| + |11><11|)/2
///   product          diag(3/4, 1/4) (x) diag(1/3, 2/3)
///   werner:p         p |psi-><psi-| + (1 - p) 1/4, 0 <= p <= 1
/// Throws std::invalid_argument for unknown names or p outside [0, 1].
BipartiteState builtin_state(const std::string &name);

/// Names accepted by builtin_state, with "werner:p" standing for the family.
std::vector<std::string> builtin_names();

}  // namespace qrmi

#endif  // QRMI_BUILTINS_H
