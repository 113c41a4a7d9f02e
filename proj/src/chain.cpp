#include "qem/chain.hpp"

#include "qem/linalg.hpp"

#include <numeric>
#include <stdexcept>

namespace qem {

double TruncationReport::total() const { return std::accumulate(discarded.begin(), discarded.end(), 0.0); }

namespace chain {

Index left_dim(const Tensor &site) { return site.dim(0); }
Index right_dim(const Tensor &site) { return site.dim(site.rank() - 1); }
Index phys_dim(const Tensor &site) { return site.size() / std::max<Index>(left_dim(site) * right_dim(site), 1); }

namespace {

std::vector<Index> with_left(const Tensor &site, Index left) {
    auto d = site.dims();
    d.front() = left;
    return d;
}

std::vector<Index> with_right(const Tensor &site, Index right) {
    auto d = site.dims();
    d.back() = right;
    return d;
}

// site <- site * m on the right bond
void absorb_right(Tensor &site, const Mat &m) {
    const Mat prod = site.matrix(site.rank() - 1) * m;
    site           = Tensor::from_matrix(prod, with_right(site, m.cols()));
}

// site <- m * site on the left bond
void absorb_left(Tensor &site, const Mat &m) {
    const Mat prod = m * site.matrix(1);
    site           = Tensor::from_matrix(prod, with_left(site, m.rows()));
}

void left_step(Sites &sites, size_t j) {
    auto qr   = thin_qr(sites[j].matrix(sites[j].rank() - 1));
    sites[j]  = Tensor::from_matrix(qr.q, with_right(sites[j], qr.q.cols()));
    absorb_left(sites[j + 1], qr.r);
}

void right_step(Sites &sites, size_t j) {
    auto lq  = thin_lq(sites[j].matrix(1));
    sites[j] = Tensor::from_matrix(lq.q, with_left(sites[j], lq.q.rows()));
    absorb_right(sites[j - 1], lq.r);
}

} // namespace

void canonicalize(Sites &sites, int center) {
    const int n = static_cast<int>(sites.size());
    if(center < 0 || center >= n) throw std::out_of_range("canonicalize: center out of range");
    for(int j = 0; j < center; ++j) left_step(sites, static_cast<size_t>(j));
    for(int j = n - 1; j > center; --j) right_step(sites, static_cast<size_t>(j));
}

void move_center_right(Sites &sites, size_t j) { left_step(sites, j); }
void move_center_left(Sites &sites, size_t j) { right_step(sites, j); }

TruncationReport truncate_left_canonical(Sites &sites, Index max_bond, double cutoff) {
    TruncationReport report;
    report.discarded.assign(sites.empty() ? 0 : sites.size() - 1, 0.0);
    for(size_t j = sites.size() - 1; j > 0; --j) {
        auto svd                 = truncated_svd(sites[j].matrix(1), max_bond, cutoff);
        sites[j]                 = Tensor::from_matrix(svd.vh, with_left(sites[j], svd.vh.rows()));
        report.discarded[j - 1]  = svd.discarded;
        absorb_right(sites[j - 1], svd.u * svd.s.cast<cplx>().asDiagonal());
    }
    return report;
}

TruncationReport truncate(Sites &sites, Index max_bond, double cutoff) {
    if(sites.empty()) return {};
    canonicalize(sites, static_cast<int>(sites.size()) - 1);
    return truncate_left_canonical(sites, max_bond, cutoff);
}

TruncationReport zip_up(Sites &out, size_t n_sites, const std::function<Tensor(size_t)> &site_at, Index max_bond,
                        double cutoff) {
    out.clear();
    out.reserve(n_sites);
    Mat carry = Mat::Identity(1, 1);
    for(size_t j = 0; j < n_sites; ++j) {
        Tensor site = site_at(j);
        if(carry.cols() != left_dim(site)) throw std::invalid_argument("zip_up: bond mismatch between consecutive sites");
        absorb_left(site, carry);
        if(j + 1 == n_sites) {
            out.push_back(std::move(site));
            break;
        }
        auto qr = thin_qr(site.matrix(site.rank() - 1));
        out.push_back(Tensor::from_matrix(qr.q, with_right(site, qr.q.cols())));
        carry = std::move(qr.r);
    }
    return truncate_left_canonical(out, max_bond, cutoff);
}

cplx overlap(const Sites &a, const Sites &b) {
    if(a.size() != b.size()) throw std::invalid_argument("overlap: site count mismatch");
    Mat env = Mat::Ones(1, 1);
    for(size_t j = 0; j < a.size(); ++j) {
        const Index ra = right_dim(a[j]);
        const Index lb = left_dim(b[j]);
        const Index p  = phys_dim(a[j]);
        if(p != phys_dim(b[j])) throw std::invalid_argument("overlap: physical dimension mismatch");
        // y(lb, p*ra) = env^T(lb, la) * a(la, p*ra)
        RowMat y = env.transpose() * a[j].matrix(1);
        Eigen::Map<const RowMat> yr(y.data(), lb * p, ra);
        env = yr.transpose() * b[j].matrix(b[j].rank() - 1).conjugate();
    }
    return env(0, 0);
}

Sites difference(const Sites &a, const Sites &b) {
    const size_t n = a.size();
    if(n != b.size()) throw std::invalid_argument("difference: site count mismatch");
    Sites out;
    for(size_t j = 0; j < n; ++j) {
        const Index la = left_dim(a[j]), ra = right_dim(a[j]);
        const Index lb = left_dim(b[j]), rb = right_dim(b[j]);
        const Index p  = phys_dim(a[j]);
        const Index l  = (j == 0) ? 1 : la + lb;
        const Index r  = (j + 1 == n) ? 1 : ra + rb;
        auto        dims = a[j].dims();
        dims.front()     = l;
        dims.back()      = r;
        Tensor t(dims);
        const Index ol = (j == 0) ? 0 : la, or_ = (j + 1 == n) ? 0 : ra;
        const cplx  sign = (j == 0) ? cplx{-1.0} : cplx{1.0};
        for(Index x = 0; x < la; ++x)
            for(Index q = 0; q < p; ++q)
                for(Index y = 0; y < ra; ++y) t[(x * p + q) * r + y] = a[j][(x * p + q) * ra + y];
        for(Index x = 0; x < lb; ++x)
            for(Index q = 0; q < p; ++q)
                for(Index y = 0; y < rb; ++y) t[((x + ol) * p + q) * r + y + or_] += sign * b[j][(x * p + q) * rb + y];
        out.push_back(std::move(t));
    }
    return out;
}

double distance_sq(const Sites &a, const Sites &b) {
    Sites d = difference(a, b);
    canonicalize(d, static_cast<int>(d.size()) - 1);
    const double nrm = d.back().norm();
    return nrm * nrm;
}

double isometry_residual(const Tensor &site, bool left) {
    if(left) {
        const auto m = site.matrix(site.rank() - 1);
        return (m.adjoint() * m - Mat::Identity(m.cols(), m.cols())).norm();
    }
    const auto m = site.matrix(1);
    return (m * m.adjoint() - Mat::Identity(m.rows(), m.rows())).norm();
}

} // namespace chain
} // namespace qem
