#include "qem/inverse.hpp"

#include "qem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qem {

namespace {

Tensor ones3() { return Tensor({1, 1, 1}, {cplx{1.0}}); }
Tensor ones2() { return Tensor({1, 1}, {cplx{1.0}}); }

// Largest useful bond between site k and k+1 of an n-site chain with physical dimension 16.
Index bond_capacity(int k, int n, Index cap) {
    Index left = 1, right = 1;
    for(int i = 0; i <= k && left < cap; ++i) left *= 16;
    for(int i = k + 1; i < n && right < cap; ++i) right *= 16;
    return std::min({left, right, cap});
}

Mpo random_guess(int n, Index bond_dim, std::uint64_t seed) {
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Sites                            sites;
    for(int j = 0; j < n; ++j) {
        const Index l = j == 0 ? 1 : bond_capacity(j - 1, n, bond_dim);
        const Index r = j == n - 1 ? 1 : bond_capacity(j, n, bond_dim);
        Tensor      t({l, 4, 4, r});
        for(Index i = 0; i < t.size(); ++i) t[i] = cplx(nd(rng), nd(rng));
        sites.push_back(std::move(t));
    }
    Mpo m(std::move(sites));
    canonicalize(m, 0);
    return m;
}

} // namespace

InverseWorkspace::InverseWorkspace(const Mpo &target, Mpo guess, double w_cutoff)
    : target_(target), guess_(std::move(guess)) {
    if(target_.size() != guess_.size()) throw std::invalid_argument("InverseWorkspace: site count mismatch");
    const int n = target_.size();
    w_          = truncate(multiply(target_, dagger(target_)), 0, w_cutoff).first;
    c_          = std::pow(4.0, n);
    ql_.assign(static_cast<size_t>(n), Tensor());
    qr_.assign(static_cast<size_t>(n), Tensor());
    ll_.assign(static_cast<size_t>(n), Tensor());
    rl_.assign(static_cast<size_t>(n), Tensor());
    ql_.front() = ones3();
    qr_.back()  = ones3();
    ll_.front() = ones2();
    rl_.back()  = ones2();
    ql_valid_ = ll_valid_ = 0;
    qr_valid_ = rl_valid_ = n - 1;
    last_error_ = error();
}

void InverseWorkspace::invalidate(int site) {
    ql_valid_ = std::min(ql_valid_, site);
    ll_valid_ = std::min(ll_valid_, site);
    qr_valid_ = std::max(qr_valid_, site);
    rl_valid_ = std::max(rl_valid_, site);
}

const Tensor &InverseWorkspace::left_quad(int site) {
    while(ql_valid_ < site) {
        const int     k  = ql_valid_;
        const Tensor &x  = guess_.site(k);
        const Tensor &w  = w_.site(k);
        Tensor        t1 = einsum(ql_[static_cast<size_t>(k)], {0, 1, 2}, x, {2, 3, 4, 5}, {0, 1, 3, 4, 5});
        Tensor        t2 = einsum(t1, {0, 1, 3, 4, 5}, w, {1, 4, 6, 7}, {0, 3, 5, 6, 7});
        ql_[static_cast<size_t>(k + 1)] = einsum(t2, {0, 3, 5, 6, 7}, x.conj(), {0, 3, 6, 8}, {8, 7, 5});
        ++ql_valid_;
    }
    return ql_[static_cast<size_t>(site)];
}

const Tensor &InverseWorkspace::right_quad(int site) {
    while(qr_valid_ > site) {
        const int     k  = qr_valid_;
        const Tensor &x  = guess_.site(k);
        const Tensor &w  = w_.site(k);
        Tensor        t1 = einsum(x, {0, 1, 2, 3}, qr_[static_cast<size_t>(k)], {4, 5, 3}, {0, 1, 2, 4, 5});
        Tensor        t2 = einsum(t1, {0, 1, 2, 4, 5}, w, {6, 2, 7, 5}, {0, 1, 4, 6, 7});
        qr_[static_cast<size_t>(k - 1)] = einsum(t2, {0, 1, 4, 6, 7}, x.conj(), {8, 1, 7, 4}, {8, 6, 0});
        --qr_valid_;
    }
    return qr_[static_cast<size_t>(site)];
}

const Tensor &InverseWorkspace::left_lin(int site) {
    while(ll_valid_ < site) {
        const int     k = ll_valid_;
        const Tensor &x = guess_.site(k);
        const Tensor &u = target_.site(k);
        Tensor        t = einsum(ll_[static_cast<size_t>(k)], {0, 1}, x, {0, 2, 3, 4}, {1, 2, 3, 4});
        ll_[static_cast<size_t>(k + 1)] = einsum(t, {1, 2, 3, 4}, u, {1, 3, 2, 5}, {4, 5});
        ++ll_valid_;
    }
    return ll_[static_cast<size_t>(site)];
}

const Tensor &InverseWorkspace::right_lin(int site) {
    while(rl_valid_ > site) {
        const int     k = rl_valid_;
        const Tensor &x = guess_.site(k);
        const Tensor &u = target_.site(k);
        Tensor        t = einsum(x, {0, 2, 3, 4}, rl_[static_cast<size_t>(k)], {4, 5}, {0, 2, 3, 5});
        rl_[static_cast<size_t>(k - 1)] = einsum(t, {0, 2, 3, 5}, u, {1, 3, 2, 5}, {0, 1});
        --rl_valid_;
    }
    return rl_[static_cast<size_t>(site)];
}

Mat InverseWorkspace::local_gram(int site) {
    const Tensor &ql = left_quad(site);
    const Tensor &qr = right_quad(site);
    Tensor        a  = einsum(ql, {0, 1, 2}, w_.site(site), {1, 3, 4, 5}, {0, 2, 3, 4, 5});
    Tensor        g  = einsum(a, {0, 2, 3, 4, 5}, qr, {6, 5, 7}, {0, 4, 6, 2, 3, 7});
    return g.matrix(3);
}

// K[l, t, s, r] with Tr[X U] = sum K . X_site
Tensor InverseWorkspace::linear_site(int site) {
    const Tensor &ll = left_lin(site);
    const Tensor &rl = right_lin(site);
    Tensor        a  = einsum(ll, {0, 1}, target_.site(site), {1, 2, 3, 4}, {0, 2, 3, 4});
    return einsum(a, {0, 2, 3, 4}, rl, {5, 4}, {0, 3, 2, 5});
}

Mat InverseWorkspace::environment_M(int site) {
    const Mat   g = local_gram(site);
    const auto &x = guess_.site(site);
    const Index l = x.dim(0), r = x.dim(3);
    const Index d = 16 * l * r;
    Mat         m = Mat::Zero(d, d);
    auto        full = [&](Index li, Index t, Index s, Index ri) { return ((li * 4 + t) * 4 + s) * r + ri; };
    auto        loc  = [&](Index li, Index s, Index ri) { return (li * 4 + s) * r + ri; };
    for(Index t = 0; t < 4; ++t)
        for(Index l1 = 0; l1 < l; ++l1)
            for(Index b = 0; b < 4; ++b)
                for(Index r1 = 0; r1 < r; ++r1)
                    for(Index l2 = 0; l2 < l; ++l2)
                        for(Index a = 0; a < 4; ++a)
                            for(Index r2 = 0; r2 < r; ++r2)
                                m(full(l1, t, b, r1), full(l2, t, a, r2)) = g(loc(l1, b, r1), loc(l2, a, r2));
    return m;
}

Vec InverseWorkspace::environment_N(int site) {
    const Tensor k = linear_site(site);
    return Eigen::Map<const Vec>(k.data(), k.size()).conjugate();
}

double InverseWorkspace::update_site(int site, double solve_cutoff) {
    const Mat    g  = local_gram(site);
    const Tensor k  = permute(linear_site(site), {0, 2, 3, 1}); // (l, s, r, t)
    const Mat    nm = Mat(k.matrix(3)).conjugate();
    const Mat    xm = solve_hermitian_psd(g, nm, solve_cutoff);

    Tensor &x = guess_.site(site);
    x         = permute(Tensor::from_matrix(xm, {k.dim(0), k.dim(1), k.dim(2), 4}), {0, 3, 1, 2});
    invalidate(site);
    ++iterations_;

    const double quad = std::real((xm.adjoint() * g * xm).trace());
    const double lin  = std::real((nm.adjoint() * xm).trace());
    last_error_       = quad - 2.0 * lin + c_;
    return last_error_;
}

void InverseWorkspace::shift_right(int site) {
    auto    &sites = guess_.sites();
    Tensor  &x     = sites[static_cast<size_t>(site)];
    auto     qr    = thin_qr(x.matrix(3));
    const Index k  = qr.q.cols();
    x              = Tensor::from_matrix(qr.q, {x.dim(0), 4, 4, k});
    Tensor &nx     = sites[static_cast<size_t>(site + 1)];
    nx             = Tensor::from_matrix(qr.r * nx.matrix(1), {k, 4, 4, nx.dim(3)});
    invalidate(site);
    invalidate(site + 1);
}

void InverseWorkspace::shift_left(int site) {
    auto    &sites = guess_.sites();
    Tensor  &x     = sites[static_cast<size_t>(site)];
    auto     lq    = thin_lq(x.matrix(1));
    const Index k  = lq.q.rows();
    x              = Tensor::from_matrix(lq.q, {k, 4, 4, x.dim(3)});
    Tensor &px     = sites[static_cast<size_t>(site - 1)];
    px             = Tensor::from_matrix(px.matrix(3) * lq.r, {px.dim(0), 4, 4, k});
    invalidate(site);
    invalidate(site - 1);
}

double InverseWorkspace::error() const {
    const Mpo xu = multiply(guess_, target_);
    return chain::distance_sq(xu.sites(), Mpo::identity(size()).sites());
}

Vec solve_site(const Mat &m, const Vec &n, double rel_cutoff) { return solve_hermitian_psd(m, n, rel_cutoff); }

Mpo initial_inverse_guess(const Mpo &u, Index bond_dim) {
    if(bond_dim < 1) throw std::invalid_argument("initial_inverse_guess: bond_dim must be >= 1");
    Mpo       g = truncate(dagger(u), bond_dim, kDefaultCutoff).first; // right-canonical, center 0
    const int n = g.size();
    auto     &s = g.sites();
    for(int j = n - 1; j >= 1; --j) {
        const Index cur    = s[static_cast<size_t>(j)].dim(0);
        const Index target = bond_capacity(j - 1, n, bond_dim);
        if(cur >= target) continue;
        Tensor     &x   = s[static_cast<size_t>(j)];
        const Mat   q   = x.matrix(1).adjoint();
        const Mat   add = orthonormal_completion(q, target);
        Mat         rows(target, q.rows());
        rows.topRows(cur)             = q.adjoint();
        rows.bottomRows(target - cur) = add.adjoint();
        x = Tensor::from_matrix(rows, {target, 4, 4, x.dim(3)});
        Tensor &px = s[static_cast<size_t>(j - 1)];
        Mat     pm = Mat::Zero(px.size() / cur, target);
        pm.leftCols(cur) = px.matrix(3);
        px = Tensor::from_matrix(pm, {px.dim(0), 4, 4, target});
    }
    return g;
}

std::pair<Mpo, InverseReport> mpo_inverse(const Mpo &u, const InverseOptions &opt) {
    if(opt.bond_dim < 1) throw std::invalid_argument("mpo_inverse: bond_dim must be >= 1");
    const int n = u.size();
    Mpo guess   = opt.random_init ? random_guess(n, opt.bond_dim, opt.seed) : initial_inverse_guess(u, opt.bond_dim);
    InverseWorkspace ws(u, std::move(guess), opt.w_cutoff);
    const double     c = ws.normalization();

    InverseReport rep;
    rep.normalization = c;
    double e          = ws.error();
    rep.error_history.push_back(e / c);
    rep.trace_infidelity_history.push_back(trace_infidelity_mpo(ws.guess()));

    for(int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        if(n == 1) {
            rep.site_errors.push_back(ws.update_site(0, opt.solve_cutoff) / c);
        } else {
            for(int j = 0; j + 1 < n; ++j) {
                rep.site_errors.push_back(ws.update_site(j, opt.solve_cutoff) / c);
                ws.shift_right(j);
            }
            for(int j = n - 1; j > 0; --j) {
                rep.site_errors.push_back(ws.update_site(j, opt.solve_cutoff) / c);
                ws.shift_left(j);
            }
        }
        const double prev = e;
        e                 = ws.error();
        rep.error_history.push_back(e / c);
        rep.trace_infidelity_history.push_back(trace_infidelity_mpo(ws.guess()));
        rep.sweeps_used = sweep + 1;
        if(std::abs(e - prev) / c < opt.tol) {
            rep.converged = true;
            break;
        }
    }
    rep.final_error = e;
    return {ws.guess(), std::move(rep)};
}

std::pair<Mpo, InverseReport> mpo_inverse(const Mpo &u, Index bond_dim, int max_sweeps, double tol) {
    InverseOptions opt;
    opt.bond_dim   = bond_dim;
    opt.max_sweeps = max_sweeps;
    opt.tol        = tol;
    return mpo_inverse(u, opt);
}

} // namespace qem
