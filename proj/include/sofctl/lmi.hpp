#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sofctl/linalg.hpp"

namespace sofctl {

// One diagonal block of G(x) = G0 + sum_i x_i G_i.
struct LmiBlock {
    Matrix constant;
    std::vector<Matrix> coefficients;  // one per decision variable, zero allowed

    Index size() const { return constant.rows(); }
};

/// Block-diagonal affine symmetric matrix function of scalar decision variables.
/// The constraint it encodes is G(x) >= 0 blockwise.
class LinearMatrixExpr {
public:
    explicit LinearMatrixExpr(Index num_vars = 0) : num_vars_(num_vars) {}

    Index num_vars() const { return num_vars_; }
    const std::vector<LmiBlock>& blocks() const { return blocks_; }
    std::size_t num_blocks() const { return blocks_.size(); }

    // Sum of block sizes.
    Index total_dimension() const;

    /// Appends a block with all variable coefficients zero; returns its index.
    std::size_t add_block(const Matrix& constant);

    void set_coefficient(std::size_t block, Index var, const Matrix& g);
    void add_to_coefficient(std::size_t block, Index var, const Matrix& g);
    void add_to_constant(std::size_t block, const Matrix& g);

    /// Extends the variable list by `count` zero-coefficient variables.
    void append_variables(Index count);

    /// Checks squareness, symmetry and coefficient list lengths.
    void validate() const;

private:
    Index num_vars_;
    std::vector<LmiBlock> blocks_;
};

/// Per-block G0 + sum_i x_i G_i, symmetrized.
std::vector<Matrix> eval_lmi(const LinearMatrixExpr& expr, const Vector& x);

/// Smallest eigenvalue over every block of G(x).
double lmi_min_eig(const LinearMatrixExpr& expr, const Vector& x);

enum class SdpStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

const char* to_string(SdpStatus status);

struct SdpSettings {
    double mu = 10.0;              // barrier parameter growth per outer iteration
    double t0 = 1.0;
    double gap_tol = 1e-9;         // stop once total_dimension / t falls below
    double decrement_tol = 1e-10;  // Newton decrement^2 / 2 at which centering stops
    int max_outer = 50;
    int max_inner = 100;
    double feasibility_tol = 1e-8;
    double damping_floor = 1e-12;
    // The constraint solved is G(x) >= strictness_margin * I.
    double strictness_margin = 0.0;
    // |objective| beyond this is reported as an unbounded (numerical) failure.
    double objective_limit = 1e12;
};

struct SdpSolution {
    Vector x;
    double objective = 0.0;
    double min_constraint_eig = 0.0;
    SdpStatus status = SdpStatus::NumericalFailure;
    int iterations = 0;        // Newton steps, phase 1 included
    int outer_iterations = 0;
    double barrier_t = 0.0;
    double final_decrement = 0.0;
    std::vector<double> objective_history;  // c^T x after each centering
    std::string message;
};

/// Path-following log-det barrier method.
///
/// Minimizes -/+ t c^T x - sum_blocks logdet G_b(x) by damped Newton, growing t by
/// mu until total_dimension / t < gap_tol. Without a strictly feasible start, a
/// phase-1 problem max s s.t. G(x) - s I >= 0 is solved from x = 0 first.
SdpSolution solve_sdp(const LinearMatrixExpr& expr, const Vector& objective, bool maximize,
                      const std::optional<Vector>& strictly_feasible_start = std::nullopt,
                      const SdpSettings& settings = {});

// Symmetric matrix variables are packed as their upper triangle, row by row.
// Variable k multiplies packed_basis(n, k), which carries a 1 in both (i, j)
// and (j, i), so the packed scalar equals the matrix entry.
Index packed_size(Index n);
Matrix packed_basis(Index n, Index k);
Matrix unpack_symmetric(const Vector& x, Index offset, Index n);
Vector pack_symmetric(const Matrix& s);

/// X - Y Z^{-1} Y^T for M = [[X, Y], [Y^T, Z]] with X of size `partition`.
Matrix schur_complement(const Matrix& m, Index partition);

/// Non-strict block PSD test through the Moore-Penrose form:
/// Z >= 0, X - Y Z^+ Y^T >= 0 and Y (I - Z Z^+) = 0, all to `tol`.
bool psd_test_nonstrict(const Matrix& m, Index partition, double tol = 1e-9);

}  // namespace sofctl
