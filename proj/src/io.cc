#include "qrmi/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qrmi {

nlohmann::json to_json(const HermitianOperator &h) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < h.dim(); i++) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < h.dim(); j++) {
            row.push_back({h(i, j).real(), h(i, j).imag()});
        }
        entries.push_back(std::move(row));
    }
    return {{"dim", h.dim()}, {"entries", std::move(entries)}};
}

HermitianOperator operator_from_json(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
        throw std::invalid_argument("matrix JSON needs \"dim\" and \"entries\"");
    }
    const int dim = j.at("dim").get<int>();
    const auto &entries = j.at("entries");
    if (dim <= 0 || !entries.is_array() || static_cast<int>(entries.size()) != dim) {
        throw std::invalid_argument("matrix JSON: entries must have dim rows");
    }
    Matrix m(dim, dim);
    for (int r = 0; r < dim; r++) {
        const auto &row = entries[r];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw std::invalid_argument("matrix JSON: row " + std::to_string(r) + " must have dim entries");
        }
        for (int c = 0; c < dim; c++) {
            const auto &e = row[c];
            if (e.is_number()) {
                m(r, c) = Complex(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            } else {
                throw std::invalid_argument("matrix JSON: entries must be [re, im] pairs");
            }
        }
    }
    HermitianOperator h(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (h.hermiticity_correction() > 1e-8 * scale) {
        throw std::invalid_argument("matrix JSON: operator is not Hermitian");
    }
    return h;
}

HermitianOperator read_operator_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return operator_from_json(j);
}

void write_operator_file(const std::string &path, const HermitianOperator &h) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << to_json(h).dump(2) << "\n";
}

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace qrmi
