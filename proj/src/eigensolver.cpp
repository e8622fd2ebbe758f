#include "peaklab/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace peaklab {

namespace {

// Two passes of modified Gram-Schmidt in the B inner product. Columns that
// collapse are replaced by fresh random directions.
void b_orthonormalize(DenseMatrix& Y, const SparseMatrix& B, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    for (int j = 0; j < Y.cols(); ++j) {
        for (int attempt = 0; attempt < 3; ++attempt) {
            const double before = std::sqrt(std::max(Y.col(j).dot(B * Y.col(j)), 0.0));
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i < j; ++i) {
                    const Vector Bi = B * Y.col(i);
                    Y.col(j) -= Bi.dot(Y.col(j)) * Y.col(i);
                }
            }
            const double after = std::sqrt(std::max(Y.col(j).dot(B * Y.col(j)), 0.0));
            if (after > 1e-10 * before && after > 0.0) {
                Y.col(j) /= after;
                break;
            }
            for (int r = 0; r < Y.rows(); ++r) Y(r, j) = normal(rng);
        }
    }
}

double norm1(const SparseMatrix& M) {
    double best = 0.0;
    for (int j = 0; j < M.outerSize(); ++j) {
        double col = 0.0;
        for (SparseMatrix::InnerIterator it(M, j); it; ++it) col += std::abs(it.value());
        best = std::max(best, col);
    }
    return best;
}

// Normwise backward error of the pair (lambda, v).
double backward_error(const SparseMatrix& A, const SparseMatrix& B, double normA, double normB, double lam,
                      const Vector& v) {
    const Vector r = A * v - lam * (B * v);
    return r.norm() / ((normA + std::abs(lam) * normB) * v.norm() + 1e-300);
}

}  // namespace

GeneralizedEigen smallest_eigenpairs(const SparseMatrix& A, const SparseMatrix& B, int k, double shift,
                                     double tol, int max_iter) {
    const int n = static_cast<int>(A.rows());
    require(k >= 1 && k < n, "eigenpairs: need 1 <= k < dimension");
    GeneralizedEigen out;
    const double normA = norm1(A);
    const double normB = norm1(B);

    if (n <= 200) {
        const DenseMatrix Ad = DenseMatrix(A);
        const DenseMatrix Bd = DenseMatrix(B);
        Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> ges(Ad, Bd);
        if (ges.info() != Eigen::Success) throw NumericalError("dense generalized eigensolver failed");
        out.values = ges.eigenvalues().head(k);
        out.vectors = ges.eigenvectors().leftCols(k);
    } else {
        const SparseMatrix S = A - shift * B;
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
        if (ldlt.info() != Eigen::Success) {
            throw NumericalError("eigenpairs: shifted matrix factorization failed (shift not below spectrum?)");
        }
        if ((ldlt.vectorD().array() <= 0.0).any()) {
            throw NumericalError("eigenpairs: shift is not below the spectrum");
        }
        const int p = std::min(n, std::max(2 * k, k + 8));
        std::mt19937_64 rng(0x5eed1234ULL);
        std::normal_distribution<double> normal;
        DenseMatrix X(n, p);
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < n; ++i) X(i, j) = normal(rng);
        X.col(0).setOnes();
        b_orthonormalize(X, B, rng);

        bool converged = false;
        for (int it = 1; it <= max_iter; ++it) {
            DenseMatrix Y = ldlt.solve(DenseMatrix(B * X));
            b_orthonormalize(Y, B, rng);
            DenseMatrix Ar = Y.transpose() * (A * Y);
            Ar = 0.5 * (Ar + Ar.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<DenseMatrix> es(Ar);
            X = Y * es.eigenvectors();
            out.values = es.eigenvalues().head(k);
            out.iterations = it;

            converged = true;
            out.residuals.assign(k, 0.0);
            for (int j = 0; j < k; ++j) {
                const double r = backward_error(A, B, normA, normB, out.values[j], X.col(j));
                out.residuals[j] = r;
                if (r > tol) converged = false;
            }
            if (converged) break;
        }
        if (!converged) {
            std::ostringstream os;
            os << "eigenpairs: subspace iteration did not converge in " << max_iter << " iterations";
            throw NumericalError(os.str());
        }
        out.vectors = X.leftCols(k);
        return out;
    }

    out.residuals.assign(k, 0.0);
    for (int j = 0; j < k; ++j) {
        out.residuals[j] = backward_error(A, B, normA, normB, out.values[j], out.vectors.col(j));
    }
    return out;
}

}  // namespace peaklab
