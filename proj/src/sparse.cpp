#include "droplet/sparse.hpp"

namespace droplet {

void MatrixBuilder::add_block(const MatrixBuilder& other, int row_offset, int col_offset, double scale) {
    for (const auto& t : other.triplets())
        triplets_.emplace_back(t.row() + row_offset, t.col() + col_offset, scale * t.value());
}

void MatrixBuilder::add_block_transposed(const MatrixBuilder& other, int row_offset, int col_offset,
                                         double scale) {
    for (const auto& t : other.triplets())
        triplets_.emplace_back(t.col() + row_offset, t.row() + col_offset, scale * t.value());
}

SparseMatrix MatrixBuilder::compress(const std::vector<bool>& constrained) const {
    SparseMatrix a(rows_, cols_);
    if (constrained.empty()) {
        a.setFromTriplets(triplets_.begin(), triplets_.end());
        return a;
    }
    std::vector<Triplet> filtered;
    filtered.reserve(triplets_.size());
    for (const auto& t : triplets_) {
        const bool ri = constrained[t.row()], cj = constrained[t.col()];
        if (!ri && !cj) filtered.push_back(t);
    }
    for (int i = 0; i < rows_ && i < cols_; ++i)
        if (constrained[i]) filtered.emplace_back(i, i, 1.0);
    a.setFromTriplets(filtered.begin(), filtered.end());
    return a;
}

SparseMatrix MatrixBuilder::compress_rows(const std::vector<bool>& row_constrained) const {
    SparseMatrix a(rows_, cols_);
    std::vector<Triplet> filtered;
    filtered.reserve(triplets_.size());
    for (const auto& t : triplets_)
        if (!row_constrained[t.row()]) filtered.push_back(t);
    a.setFromTriplets(filtered.begin(), filtered.end());
    return a;
}

void DirectSolver::factorize(const SparseMatrix& a) {
    if (!analyzed_) {
        lu_.analyzePattern(a);
        analyzed_ = true;
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) throw LinearSolveError("sparse LU factorization failed");
}

Vector DirectSolver::solve(const Vector& rhs) const {
    Vector x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw LinearSolveError("sparse LU solve failed");
    return x;
}

Vector DirectSolver::solve_transposed(const Vector& rhs) {
    Vector x = lu_.transpose().solve(rhs);
    if (lu_.info() != Eigen::Success) throw LinearSolveError("sparse LU transposed solve failed");
    return x;
}

}  // namespace droplet
