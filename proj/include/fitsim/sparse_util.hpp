#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace fitsim {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatI = Eigen::SparseMatrix<int>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A[rows, cols] for sparse matrices (selection by index lists).
SpMat slice(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols);
SpMatI slice(const SpMatI& A, const std::vector<int>& rows, const std::vector<int>& cols);
SpMat slice_cols(const SpMat& A, const std::vector<int>& cols);
SpMatI slice_cols(const SpMatI& A, const std::vector<int>& cols);
SpMat slice_rows(const SpMat& A, const std::vector<int>& rows);

SpMat diag_matrix(const Vec& d);

/// Builds a sparse matrix from placed blocks.
class BlockBuilder {
public:
    BlockBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}
    void add(int r0, int c0, const SpMat& block, double scale = 1.0);
    void add_identity(int r0, int c0, int n, double scale = 1.0);
    void add_diag(int r0, int c0, const Vec& d, double scale = 1.0);
    SpMat finish() const;

private:
    int rows_, cols_;
    std::vector<Eigen::Triplet<double>> trips_;
};

/// Structural nonzero pattern comparison (ignores values, drops explicit zeros).
bool same_pattern(const SpMat& A, const SpMat& B, double drop_tol = 0.0);

/// Ruiz equilibration of a square pencil (M, K): returns diagonal scalings r, c
/// such that diag(r) * [M K] * diag(c) has balanced rows/columns. Diagonal
/// equivalence transforms preserve the Kronecker index of the pencil.
void equilibrate_pencil(Mat& M, Mat& K, int sweeps = 6);

/// MatrixMarket coordinate format I/O (1-based indices).
void mm_write(const std::string& path, const SpMat& A, const std::string& comment = "");
void mm_write(const std::string& path, const SpMatI& A, const std::string& comment = "");
SpMat mm_read(const std::string& path);

}  // namespace fitsim
