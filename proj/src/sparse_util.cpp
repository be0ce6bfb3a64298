#include "fitsim/sparse_util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fitsim/errors.hpp"

namespace fitsim {

namespace {

template <typename Scalar>
Eigen::SparseMatrix<Scalar> slice_impl(const Eigen::SparseMatrix<Scalar>& A,
                                       const std::vector<int>* rows,
                                       const std::vector<int>* cols) {
    std::vector<int> rowmap, colmap;
    int nr, nc;
    if (rows) {
        rowmap.assign(A.rows(), -1);
        for (size_t i = 0; i < rows->size(); ++i) rowmap[(*rows)[i]] = static_cast<int>(i);
        nr = static_cast<int>(rows->size());
    } else {
        nr = static_cast<int>(A.rows());
    }
    if (cols) {
        colmap.assign(A.cols(), -1);
        for (size_t i = 0; i < cols->size(); ++i) colmap[(*cols)[i]] = static_cast<int>(i);
        nc = static_cast<int>(cols->size());
    } else {
        nc = static_cast<int>(A.cols());
    }
    std::vector<Eigen::Triplet<Scalar>> trips;
    trips.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k) {
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) {
            int r = rows ? rowmap[it.row()] : static_cast<int>(it.row());
            int c = cols ? colmap[it.col()] : static_cast<int>(it.col());
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    }
    Eigen::SparseMatrix<Scalar> out(nr, nc);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace

SpMat slice(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols) {
    return slice_impl<double>(A, &rows, &cols);
}
SpMatI slice(const SpMatI& A, const std::vector<int>& rows, const std::vector<int>& cols) {
    return slice_impl<int>(A, &rows, &cols);
}
SpMat slice_cols(const SpMat& A, const std::vector<int>& cols) {
    return slice_impl<double>(A, nullptr, &cols);
}
SpMatI slice_cols(const SpMatI& A, const std::vector<int>& cols) {
    return slice_impl<int>(A, nullptr, &cols);
}
SpMat slice_rows(const SpMat& A, const std::vector<int>& rows) {
    return slice_impl<double>(A, &rows, nullptr);
}

SpMat diag_matrix(const Vec& d) {
    SpMat D(d.size(), d.size());
    D.reserve(Eigen::VectorXi::Constant(d.size(), 1));
    for (int i = 0; i < d.size(); ++i) D.insert(i, i) = d[i];
    D.makeCompressed();
    return D;
}

void BlockBuilder::add(int r0, int c0, const SpMat& block, double scale) {
    for (int k = 0; k < block.outerSize(); ++k)
        for (SpMat::InnerIterator it(block, k); it; ++it)
            trips_.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
}

void BlockBuilder::add_identity(int r0, int c0, int n, double scale) {
    for (int i = 0; i < n; ++i) trips_.emplace_back(r0 + i, c0 + i, scale);
}

void BlockBuilder::add_diag(int r0, int c0, const Vec& d, double scale) {
    for (int i = 0; i < d.size(); ++i) trips_.emplace_back(r0 + i, c0 + i, scale * d[i]);
}

SpMat BlockBuilder::finish() const {
    SpMat A(rows_, cols_);
    A.setFromTriplets(trips_.begin(), trips_.end());
    return A;
}

bool same_pattern(const SpMat& A, const SpMat& B, double drop_tol) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
    SpMat Ap = A, Bp = B;
    Ap.prune([&](int, int, double v) { return std::abs(v) > drop_tol; });
    Bp.prune([&](int, int, double v) { return std::abs(v) > drop_tol; });
    Ap.makeCompressed();
    Bp.makeCompressed();
    if (Ap.nonZeros() != Bp.nonZeros()) return false;
    for (int k = 0; k < Ap.outerSize(); ++k) {
        SpMat::InnerIterator ia(Ap, k), ib(Bp, k);
        for (; ia && ib; ++ia, ++ib)
            if (ia.row() != ib.row()) return false;
        if (ia || ib) return false;
    }
    return true;
}

void equilibrate_pencil(Mat& M, Mat& K, int sweeps) {
    const int n = static_cast<int>(M.rows());
    for (int s = 0; s < sweeps; ++s) {
        for (int i = 0; i < n; ++i) {
            double m = std::max(M.row(i).cwiseAbs().maxCoeff(), K.row(i).cwiseAbs().maxCoeff());
            if (m > 0) {
                double f = 1.0 / std::sqrt(m);
                M.row(i) *= f;
                K.row(i) *= f;
            }
        }
        for (int j = 0; j < n; ++j) {
            double m = std::max(M.col(j).cwiseAbs().maxCoeff(), K.col(j).cwiseAbs().maxCoeff());
            if (m > 0) {
                double f = 1.0 / std::sqrt(m);
                M.col(j) *= f;
                K.col(j) *= f;
            }
        }
    }
}

namespace {

template <typename Scalar>
void mm_write_impl(const std::string& path, const Eigen::SparseMatrix<Scalar>& A,
                   const char* field, const std::string& comment) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
    out << "%%MatrixMarket matrix coordinate " << field << " general\n";
    if (!comment.empty()) out << "% " << comment << "\n";
    out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
    char buf[64];
    for (int k = 0; k < A.outerSize(); ++k) {
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) {
            if constexpr (std::is_integral_v<Scalar>) {
                out << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(it.value()));
                out << (it.row() + 1) << " " << (it.col() + 1) << " " << buf << "\n";
            }
        }
    }
}

}  // namespace

void mm_write(const std::string& path, const SpMat& A, const std::string& comment) {
    mm_write_impl<double>(path, A, "real", comment);
}

void mm_write(const std::string& path, const SpMatI& A, const std::string& comment) {
    mm_write_impl<int>(path, A, "integer", comment);
}

SpMat mm_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        fail(ErrorCode::io_error, path + ": not a MatrixMarket file");
    if (line.find("coordinate") == std::string::npos)
        fail(ErrorCode::io_error, path + ": only coordinate format supported");
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream hdr(line);
    long rows = 0, cols = 0, nnz = 0;
    hdr >> rows >> cols >> nnz;
    if (rows <= 0 || cols <= 0) fail(ErrorCode::io_error, path + ": bad size header");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz);
    long r, c;
    double v;
    while (in >> r >> c >> v) trips.emplace_back(static_cast<int>(r - 1), static_cast<int>(c - 1), v);
    if (static_cast<long>(trips.size()) != nnz)
        fail(ErrorCode::io_error, path + ": entry count mismatch");
    SpMat A(rows, cols);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

}  // namespace fitsim
