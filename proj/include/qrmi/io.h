#ifndef QRMI_IO_H
#define QRMI_IO_H

#include <string>

#include "json.hpp"
#include "qrmi/operator.h"

namespace qrmi {

/// {"dim": n, "entries": [[[re, im], ...], ...]} in row-major order.
nlohmann::json to_json(const HermitianOperator &h);

/// Parses the matrix format above, hermitizes, and rejects inputs whose
/// anti-Hermitian part exceeds 1e-8 * max|M|. Throws std::invalid_argument.
HermitianOperator operator_from_json(const nlohmann::json &j);

HermitianOperator read_operator_file(const std::string &path);
void write_operator_file(const std::string &path, const HermitianOperator &h);

/// Shortest round-trip-safe text with 17 significant digits, independent of
/// the locale: "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double x);

}  // namespace qrmi

#endif  // QRMI_IO_H
