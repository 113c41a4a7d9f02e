#pragma once

#include "qem/tensor.hpp"

namespace qem {

struct SvdResult {
    Mat             u;
    Eigen::VectorXd s;
    Mat             vh;
    double          discarded = 0.0; // sum of squared dropped singular values
};

/// Thin SVD keeping at most `max_bond` values and only those with s_i > cutoff * s_0. At least one is kept.
/// `max_bond <= 0` means no cap.
SvdResult truncated_svd(const Eigen::Ref<const Mat> &m, Index max_bond, double cutoff);

struct QrResult {
    Mat q; // isometry
    Mat r; // the remaining factor
};

/// m = q * r with orthonormal columns in q.
QrResult thin_qr(const Eigen::Ref<const Mat> &m);
/// m = r * q with orthonormal rows in q (r is lower-triangular in the square case).
QrResult thin_lq(const Eigen::Ref<const Mat> &m);

/// Columns completing the orthonormal columns of `q` up to `target` columns (target <= q.rows()).
Mat orthonormal_completion(const Eigen::Ref<const Mat> &q, Index target);

/// Minimum-norm least-squares solution of g x = rhs for Hermitian PSD g. Eigenvalues below
/// rel_cutoff * lambda_max are treated as zero; negative eigenvalues are clipped the same way.
Mat solve_hermitian_psd(const Eigen::Ref<const Mat> &g, const Eigen::Ref<const Mat> &rhs, double rel_cutoff = 1e-12);

} // namespace qem
