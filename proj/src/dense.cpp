#include "qem/dense.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <stdexcept>
#include <string>

namespace qem {

namespace {

Index pow_int(Index base, int exp) {
    Index r = 1;
    for(int i = 0; i < exp; ++i) r *= base;
    return r;
}

int qubits_of_dim(Index dim, Index base) {
    int   n = 0;
    Index d = 1;
    while(d < dim) {
        d *= base;
        ++n;
    }
    if(d != dim) throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of " + std::to_string(base));
    return n;
}

template<typename Fn>
void for_each_local_block(Index total_rows, Index local_dim, int first_qubit, int n_qubits, Fn &&fn) {
    const Index outer = pow_int(4, first_qubit);
    const int   k     = qubits_of_dim(local_dim, 4);
    const Index inner = pow_int(4, n_qubits - first_qubit - k);
    if(outer * local_dim * inner != total_rows) throw std::invalid_argument("apply_local: local operator does not fit");
    for(Index a = 0; a < outer; ++a) fn(a * local_dim * inner, inner);
}

} // namespace

Index interleaved_index(Index row, Index col, int n_qubits) {
    Index idx = 0;
    for(int k = n_qubits - 1, shift = 0; k >= 0; --k, ++shift) {
        const Index i = (row >> shift) & 1;
        const Index j = (col >> shift) & 1;
        idx += (2 * i + j) * pow_int(4, shift);
    }
    return idx;
}

Vec vectorized_identity(int n_qubits) {
    const Index d = Index{1} << n_qubits;
    Vec         v = Vec::Zero(d * d);
    for(Index i = 0; i < d; ++i) v(interleaved_index(i, i, n_qubits)) = 1.0;
    return v;
}

DenseSuperOp::DenseSuperOp(int n, Mat m) : n_qubits(n), matrix(std::move(m)) {
    if(n > kDenseSuperOpCap) throw std::invalid_argument("DenseSuperOp: n_qubits exceeds oracle cap");
    const Index d = pow_int(4, n);
    if(matrix.rows() != d || matrix.cols() != d) throw std::invalid_argument("DenseSuperOp: matrix must be 4^n x 4^n");
}

DenseSuperOp DenseSuperOp::identity(int n) { return {n, Mat::Identity(pow_int(4, n), pow_int(4, n))}; }

DenseState::DenseState(int n, Vec v) : n_qubits(n), vec(std::move(v)) {
    if(n > kDenseStateCap) throw std::invalid_argument("DenseState: n_qubits exceeds oracle cap");
    if(vec.size() != pow_int(4, n)) throw std::invalid_argument("DenseState: vector must have 4^n entries");
}

DenseState DenseState::from_density(const Mat &rho) {
    if(rho.rows() != rho.cols()) throw std::invalid_argument("DenseState::from_density: matrix must be square");
    const int n = qubits_of_dim(rho.rows(), 2);
    Vec       v(rho.size());
    for(Index i = 0; i < rho.rows(); ++i)
        for(Index j = 0; j < rho.cols(); ++j) v(interleaved_index(i, j, n)) = rho(i, j);
    return {n, std::move(v)};
}

DenseState DenseState::zero_product(int n) {
    Vec v = Vec::Zero(pow_int(4, n));
    v(0)  = 1.0;
    return {n, std::move(v)};
}

Mat DenseState::density() const {
    const Index d = Index{1} << n_qubits;
    Mat         rho(d, d);
    for(Index i = 0; i < d; ++i)
        for(Index j = 0; j < d; ++j) rho(i, j) = vec(interleaved_index(i, j, n_qubits));
    return rho;
}

cplx DenseState::trace() const { return vectorized_identity(n_qubits).dot(vec); }

DenseSuperOp superop_from_kraus(const std::vector<Mat> &kraus, double completeness_tol) {
    if(kraus.empty()) throw std::invalid_argument("superop_from_kraus: empty Kraus list");
    const Index d = kraus.front().rows();
    const int   n = qubits_of_dim(d, 2);
    Mat         completeness = Mat::Zero(d, d);
    for(const auto &e : kraus) {
        if(e.rows() != d || e.cols() != d) throw std::invalid_argument("superop_from_kraus: Kraus operators must be square and equal-sized");
        completeness += e.adjoint() * e;
    }
    if((completeness - Mat::Identity(d, d)).norm() > completeness_tol)
        throw std::invalid_argument("superop_from_kraus: completeness relation violated (map is not trace preserving)");

    // S[(I',J'),(I,J)] = sum_k E[I',I] conj(E[J',J]), then regroup per qubit.
    Mat                s = Mat::Zero(d * d, d * d);
    std::vector<Index> perm(static_cast<size_t>(d * d));
    for(Index i = 0; i < d; ++i)
        for(Index j = 0; j < d; ++j) perm[static_cast<size_t>(i * d + j)] = interleaved_index(i, j, n);
    for(const auto &e : kraus) {
        const Mat k = Eigen::kroneckerProduct(e, e.conjugate()).eval();
        for(Index r = 0; r < d * d; ++r)
            for(Index c = 0; c < d * d; ++c) s(perm[static_cast<size_t>(r)], perm[static_cast<size_t>(c)]) += k(r, c);
    }
    return {n, std::move(s)};
}

DenseSuperOp superop_from_unitary(const Mat &u) { return superop_from_kraus({u}); }

DenseState apply(const DenseSuperOp &op, const DenseState &state) {
    if(op.n_qubits != state.n_qubits) throw std::invalid_argument("apply: qubit count mismatch");
    return {state.n_qubits, op.matrix * state.vec};
}

DenseSuperOp compose(const DenseSuperOp &a, const DenseSuperOp &b) {
    if(a.n_qubits != b.n_qubits) throw std::invalid_argument("compose: qubit count mismatch");
    return {a.n_qubits, a.matrix * b.matrix};
}

namespace {
template<typename M>
double rel_dist(const M &a, const M &b) {
    if(a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("relative_distance: shape mismatch");
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if(na == 0.0 || nb == 0.0) throw std::invalid_argument("relative_distance: zero-norm operand");
    return (a - b).squaredNorm() / std::sqrt(na * nb);
}
} // namespace

double relative_distance(const DenseSuperOp &a, const DenseSuperOp &b) { return rel_dist(a.matrix, b.matrix); }
double relative_distance(const DenseState &a, const DenseState &b) { return rel_dist(a.vec, b.vec); }

double trace_infidelity(const DenseSuperOp &op) {
    const Vec one = vectorized_identity(op.n_qubits);
    const Vec row = op.matrix.transpose() * one;
    return (one - row).squaredNorm() / static_cast<double>(Index{1} << op.n_qubits);
}

Mat choi_matrix(const DenseSuperOp &op) {
    const int   n = op.n_qubits;
    const Index d = Index{1} << n;
    Mat         choi(d * d, d * d);
    for(Index in_r = 0; in_r < d; ++in_r)
        for(Index in_c = 0; in_c < d; ++in_c) {
            const Index col = interleaved_index(in_r, in_c, n);
            for(Index out_r = 0; out_r < d; ++out_r)
                for(Index out_c = 0; out_c < d; ++out_c)
                    choi(in_r * d + out_r, in_c * d + out_c) = op.matrix(interleaved_index(out_r, out_c, n), col);
        }
    return choi;
}

DenseSuperOp inverse(const DenseSuperOp &op) {
    Eigen::PartialPivLU<Mat> lu(op.matrix);
    Mat                      inv = lu.inverse();
    const double             res = (op.matrix * inv - Mat::Identity(op.dim(), op.dim())).norm();
    if(!(res < 1e-8)) throw std::runtime_error("inverse: residual check failed, operator is singular or ill-conditioned");
    return {op.n_qubits, std::move(inv)};
}

namespace {
void left_apply_rows(cplx *col_ptr, Index base, Index local_dim, Index inner, const Mat &local) {
    // rows base + g*inner + b, viewed as an inner x local_dim column-major block
    Eigen::Map<Mat, 0, Eigen::OuterStride<>> z(col_ptr + base, inner, local_dim, Eigen::OuterStride<>(inner));
    const Mat                                y = z * local.transpose();
    z                                          = y;
}
} // namespace

void apply_local(DenseSuperOp &op, const Mat &local, int first_qubit) {
    const Index rows = op.matrix.rows();
    for(Index c = 0; c < op.matrix.cols(); ++c) {
        cplx *col = op.matrix.data() + c * rows;
        for_each_local_block(rows, local.rows(), first_qubit, op.n_qubits,
                             [&](Index base, Index inner) { left_apply_rows(col, base, local.rows(), inner, local); });
    }
}

void apply_local(DenseState &state, const Mat &local, int first_qubit) {
    for_each_local_block(state.vec.size(), local.rows(), first_qubit, state.n_qubits,
                         [&](Index base, Index inner) { left_apply_rows(state.vec.data(), base, local.rows(), inner, local); });
}

void apply_two_qubit(DenseSuperOp &op, const Mat &g16, int q0, int q1) {
    const int n = op.n_qubits;
    if(q0 == q1 || q0 < 0 || q1 < 0 || q0 >= n || q1 >= n) throw std::invalid_argument("apply_two_qubit: invalid qubit pair");
    if(g16.rows() != 16 || g16.cols() != 16) throw std::invalid_argument("apply_two_qubit: expected a 16x16 superoperator");
    const Index s0 = pow_int(4, n - 1 - q0), s1 = pow_int(4, n - 1 - q1);
    const Index dim = op.dim();
    Vec         in(16), out(16);
    for(Index c = 0; c < op.matrix.cols(); ++c) {
        cplx *col = op.matrix.data() + c * dim;
        for(Index base = 0; base < dim; ++base) {
            if((base / s0) % 4 != 0 || (base / s1) % 4 != 0) continue;
            for(Index a = 0; a < 4; ++a)
                for(Index b = 0; b < 4; ++b) in(a * 4 + b) = col[base + a * s0 + b * s1];
            out.noalias() = g16 * in;
            for(Index a = 0; a < 4; ++a)
                for(Index b = 0; b < 4; ++b) col[base + a * s0 + b * s1] = out(a * 4 + b);
        }
    }
}

} // namespace qem
