#include "qem/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace qem {

namespace {

struct FullSvd {
    Mat             u;
    Eigen::VectorXd s;
    Mat             v;
};

// BDCSVD in Eigen 3.4 occasionally returns an inaccurate factorization of structured matrices; those
// results are caught by a reconstruction check and redone with JacobiSVD.
FullSvd robust_svd(const Eigen::Ref<const Mat> &m) {
    const unsigned opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
    {
        Eigen::BDCSVD<Mat> svd(m, opts);
        FullSvd            out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
        const double       err = (m - out.u * out.s.cast<cplx>().asDiagonal() * out.v.adjoint()).norm();
        if(err <= 1e-12 * std::max(1.0, m.norm())) return out;
    }
    Eigen::JacobiSVD<Mat> svd(m, opts);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

} // namespace

SvdResult truncated_svd(const Eigen::Ref<const Mat> &m, Index max_bond, double cutoff) {
    const FullSvd svd  = robust_svd(m);
    const auto   &s    = svd.s;
    const Index        full = s.size();
    Index              keep = full;
    if(max_bond > 0) keep = std::min(keep, max_bond);
    const double s0 = full > 0 ? s(0) : 0.0;
    while(keep > 1 && !(s(keep - 1) > cutoff * s0)) --keep;
    keep = std::max<Index>(keep, std::min<Index>(1, full));

    SvdResult r;
    r.u  = svd.u.leftCols(keep);
    r.s  = s.head(keep);
    r.vh = svd.v.leftCols(keep).adjoint();
    for(Index i = keep; i < full; ++i) r.discarded += s(i) * s(i);
    return r;
}

QrResult thin_qr(const Eigen::Ref<const Mat> &m) {
    const Index                   k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Mat>     qr(m);
    QrResult                      out;
    out.q = qr.householderQ() * Mat::Identity(m.rows(), k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

QrResult thin_lq(const Eigen::Ref<const Mat> &m) {
    QrResult t = thin_qr(m.adjoint());
    QrResult out;
    out.q = t.q.adjoint();
    out.r = t.r.adjoint();
    return out;
}

Mat orthonormal_completion(const Eigen::Ref<const Mat> &q, Index target) {
    const Index have = q.cols();
    if(target <= have) return Mat(q.rows(), 0);
    Eigen::HouseholderQR<Mat> qr(q);
    Mat                       full = qr.householderQ();
    return full.middleCols(have, target - have);
}

Mat solve_hermitian_psd(const Eigen::Ref<const Mat> &g, const Eigen::Ref<const Mat> &rhs, double rel_cutoff) {
    Mat                                     h = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat>      es(h);
    const Eigen::VectorXd                  &lam  = es.eigenvalues();
    const double                            lmax = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    Eigen::VectorXd                         inv(lam.size());
    for(Index i = 0; i < lam.size(); ++i) inv(i) = lam(i) > rel_cutoff * lmax ? 1.0 / lam(i) : 0.0;
    const Mat &v = es.eigenvectors();
    return v * (inv.asDiagonal() * (v.adjoint() * rhs));
}

} // namespace qem
