#pragma once

// Exact dense superoperators and vectorized density matrices for small qubit counts.
//
// Vectorization: |i><j| on one qubit maps to index 2*i + j, and multi-qubit indices are grouped per
// qubit with qubit 0 most significant, so a superoperator on n qubits is a 4^n x 4^n matrix whose
// row/column index is sum_k (2*i_k + j_k) * 4^(n-1-k). Tensor-network objects share this layout.

#include "qem/tensor.hpp"

#include <vector>

namespace qem {

inline constexpr int kDenseSuperOpCap = 6;
inline constexpr int kDenseStateCap   = 10;

/// Per-qubit interleaved index of the basis operator |row><col| on n qubits.
Index interleaved_index(Index row, Index col, int n_qubits);

/// Vectorized identity operator <<1| (entries 1 at i == j positions, 0 elsewhere).
Vec vectorized_identity(int n_qubits);

struct DenseSuperOp {
    int n_qubits = 0;
    Mat matrix;

    DenseSuperOp() = default;
    DenseSuperOp(int n, Mat m);
    static DenseSuperOp identity(int n);
    [[nodiscard]] Index dim() const { return matrix.rows(); }
};

struct DenseState {
    int n_qubits = 0;
    Vec vec;

    DenseState() = default;
    DenseState(int n, Vec v);
    static DenseState from_density(const Mat &rho);
    static DenseState zero_product(int n);
    [[nodiscard]] Mat  density() const;
    [[nodiscard]] cplx trace() const;
};

DenseSuperOp superop_from_kraus(const std::vector<Mat> &kraus, double completeness_tol = 1e-10);
DenseSuperOp superop_from_unitary(const Mat &u);

DenseState   apply(const DenseSuperOp &op, const DenseState &state);
/// a * b, i.e. b acts first.
DenseSuperOp compose(const DenseSuperOp &a, const DenseSuperOp &b);

double relative_distance(const DenseSuperOp &a, const DenseSuperOp &b);
double relative_distance(const DenseState &a, const DenseState &b);
/// |<<1| - <<1| op|^2 with <<1| the unit-norm vectorized identity, so it is at most ||V - op||_F^2 for TP V.
double trace_infidelity(const DenseSuperOp &op);

/// Choi matrix with row index (in, out) and column index (in', out'); PSD iff the map is CP.
Mat choi_matrix(const DenseSuperOp &op);

/// Pivoted-LU inverse, rejected when ||A A^-1 - 1||_F >= 1e-8.
DenseSuperOp inverse(const DenseSuperOp &op);

/// Left-multiplies by `local` (a superoperator on `local_qubits` consecutive qubits starting at
/// `first_qubit`), i.e. applies it after `op`.
void apply_local(DenseSuperOp &op, const Mat &local, int first_qubit);
void apply_local(DenseState &state, const Mat &local, int first_qubit);

/// Left-multiplies by a 16x16 two-qubit superoperator acting on qubits (q0, q1), which need not be
/// adjacent; q0 carries the more significant local index.
void apply_two_qubit(DenseSuperOp &op, const Mat &g16, int q0, int q1);

} // namespace qem
