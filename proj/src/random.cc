#include "qrmi/random.h"

#include <cmath>

namespace qrmi {

Matrix ginibre(int rows, int cols, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (int c = 0; c < cols; c++) {
        for (int r = 0; r < rows; r++) {
            double re = normal(rng);
            double im = normal(rng);
            g(r, c) = Complex(re, im);
        }
    }
    return g;
}

Matrix random_unitary(int dim, Rng &rng) {
    Matrix g = ginibre(dim, dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; i++) {
        Complex d = r(i, i);
        double a = std::abs(d);
        if (a > 0) {
            q.col(i) *= d / a;
        }
    }
    return q;
}

DensityMatrix random_state(int dim, int rank, Rng &rng) {
    Matrix g = ginibre(dim, rank, rng);
    Matrix m = g * g.adjoint();
    return DensityMatrix::normalized(HermitianOperator(m));
}

DensityMatrix random_state(int dim, Rng &rng) {
    return random_state(dim, dim, rng);
}

BipartiteState random_bipartite(int dim_a, int dim_b, Rng &rng) {
    return BipartiteState(random_state(dim_a * dim_b, rng), dim_a, dim_b);
}

HermitianOperator random_hermitian(int dim, Rng &rng) {
    return HermitianOperator(ginibre(dim, dim, rng));
}

HermitianOperator random_psd(int dim, Rng &rng) {
    Matrix g = ginibre(dim, dim, rng);
    return HermitianOperator(Matrix(g * g.adjoint() / static_cast<double>(dim)));
}

DensityMatrix random_diagonal_state(int dim, Rng &rng) {
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    RealVector p(dim);
    for (int i = 0; i < dim; i++) {
        p(i) = uni(rng);
    }
    p /= p.sum();
    return DensityMatrix(HermitianOperator::diagonal(p));
}

}  // namespace qrmi
