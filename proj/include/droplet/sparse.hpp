#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "droplet/field.hpp"

namespace droplet {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

class LinearSolveError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Accumulates triplets and compresses them into a sparse matrix. Homogeneous
/// Dirichlet constraints are applied symmetrically at compression time: rows
/// and columns of constrained dofs are dropped and the diagonal set to one.
class MatrixBuilder {
  public:
    MatrixBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int i, int j, double v) { triplets_.emplace_back(i, j, v); }

    void add_block(const MatrixBuilder& other, int row_offset, int col_offset, double scale = 1.0);
    void add_block_transposed(const MatrixBuilder& other, int row_offset, int col_offset, double scale = 1.0);

    /// constrained may be empty or sized to max(rows, cols); applies to both
    /// sides (square systems with homogeneous constraints).
    SparseMatrix compress(const std::vector<bool>& constrained = {}) const;

    /// Rectangular coupling blocks: drop constrained rows, keep columns.
    SparseMatrix compress_rows(const std::vector<bool>& row_constrained) const;

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const std::vector<Triplet>& triplets() const { return triplets_; }

  private:
    int rows_, cols_;
    std::vector<Triplet> triplets_;
};

/// Sparse LU with cached symbolic analysis; the pattern of successive
/// matrices must match (same mesh, same kernels). Also solves with the
/// transposed factors, which the backward-in-time sweep relies on.
class DirectSolver {
  public:
    void factorize(const SparseMatrix& a);
    Vector solve(const Vector& rhs) const;
    Vector solve_transposed(const Vector& rhs);
    bool ready() const { return analyzed_; }

  private:
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    bool analyzed_ = false;
};

}  // namespace droplet
