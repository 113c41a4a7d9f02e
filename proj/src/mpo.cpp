#include "qem/mpo.hpp"

#include "qem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qem {

namespace {

void check_chain(const Sites &sites, int rank, const std::vector<Index> &phys, const char *what) {
    if(sites.empty()) throw std::invalid_argument(std::string(what) + ": empty chain");
    for(size_t j = 0; j < sites.size(); ++j) {
        const auto &s = sites[j];
        if(s.rank() != rank) throw std::invalid_argument(std::string(what) + ": wrong site rank at " + std::to_string(j));
        for(size_t p = 0; p < phys.size(); ++p)
            if(phys[p] > 0 && s.dim(static_cast<int>(p + 1)) != phys[p])
                throw std::invalid_argument(std::string(what) + ": wrong physical dimension at site " + std::to_string(j));
        if(j > 0 && chain::right_dim(sites[j - 1]) != chain::left_dim(s))
            throw std::invalid_argument(std::string(what) + ": bond mismatch between sites " + std::to_string(j - 1) + " and " +
                                        std::to_string(j));
    }
    if(chain::left_dim(sites.front()) != 1 || chain::right_dim(sites.back()) != 1)
        throw std::invalid_argument(std::string(what) + ": boundary bonds must be 1");
}

// Sequential SVD decomposition of a row-major vector over n sites of physical dimension p each.
Sites sequential_svd(Tensor full, int n, const std::vector<Index> &site_phys, double cutoff) {
    const Index p = product(site_phys);
    Sites       sites;
    RowMat      rest = Eigen::Map<const RowMat>(full.data(), 1, full.size());
    Index       l    = 1;
    for(int j = 0; j < n; ++j) {
        std::vector<Index> dims{l};
        dims.insert(dims.end(), site_phys.begin(), site_phys.end());
        if(j + 1 == n) {
            dims.push_back(1);
            sites.push_back(Tensor::from_matrix(Eigen::Map<const RowMat>(rest.data(), l * p, 1), dims));
            break;
        }
        const Index cols = rest.size() / (l * p);
        Mat         m    = Eigen::Map<const RowMat>(rest.data(), l * p, cols);
        auto        svd  = truncated_svd(m, 0, cutoff);
        const Index k    = svd.s.size();
        dims.push_back(k);
        sites.push_back(Tensor::from_matrix(svd.u, dims));
        rest = svd.s.cast<cplx>().asDiagonal() * svd.vh;
        l    = k;
    }
    return sites;
}

Tensor mat_tensor(const Mat &m, std::vector<Index> dims) { return Tensor::from_matrix(m, std::move(dims)); }

// Product site of layer (la, t, k, ra) acting after target (lb, k, s, rb).
Tensor mpo_product_site(const Tensor &layer, const Tensor &target) {
    Tensor p = einsum(layer, {0, 1, 2, 3}, target, {4, 2, 5, 6}, {0, 4, 1, 5, 3, 6});
    return std::move(p).reshaped({layer.dim(0) * target.dim(0), 4, 4, layer.dim(3) * target.dim(3)});
}

Tensor mps_product_site(const Tensor &layer, const Tensor &psi) {
    Tensor p = einsum(layer, {0, 1, 2, 3}, psi, {4, 2, 5}, {0, 4, 1, 3, 5});
    return std::move(p).reshaped({layer.dim(0) * psi.dim(0), 4, layer.dim(3) * psi.dim(2)});
}

// Vectorized identity per qubit: (1, 0, 0, 1).
Sites ones_chain(int n) {
    Sites s;
    for(int j = 0; j < n; ++j) {
        Tensor t({1, 4, 1});
        t[0] = 1.0;
        t[3] = 1.0;
        s.push_back(std::move(t));
    }
    return s;
}

double relative_distance_sites(const Sites &a, const Sites &b) {
    const double na  = std::real(chain::overlap(a, a));
    const double nb  = std::real(chain::overlap(b, b));
    const double nab = std::real(chain::overlap(a, b));
    if(!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("relative_distance: zero-norm operand");
    return std::max(0.0, na + nb - 2.0 * nab) / std::sqrt(na * nb);
}

} // namespace

// ---------------------------------------------------------------------------------------------

Mpo::Mpo(Sites sites) : sites_(std::move(sites)) { validate(); }

void Mpo::validate() const { check_chain(sites_, 4, {4, 4}, "Mpo"); }

Mpo Mpo::identity(int n) { return product(std::vector<Mat>(static_cast<size_t>(n), Mat::Identity(4, 4))); }

Mpo Mpo::product(const std::vector<Mat> &local) {
    Sites sites;
    for(const auto &m : local) {
        if(m.rows() != 4 || m.cols() != 4) throw std::invalid_argument("Mpo::product: local maps must be 4x4");
        sites.push_back(mat_tensor(m, {1, 4, 4, 1}));
    }
    return Mpo(std::move(sites));
}

Mpo Mpo::from_dense(const DenseSuperOp &op, double cutoff) {
    const int          n = op.n_qubits;
    std::vector<Index> dims(static_cast<size_t>(2 * n), 4);
    Tensor             full = mat_tensor(op.matrix, dims);
    std::vector<int>   perm;
    for(int j = 0; j < n; ++j) {
        perm.push_back(j);
        perm.push_back(n + j);
    }
    return Mpo(sequential_svd(permute(full, perm), n, {4, 4}, cutoff));
}

Index Mpo::bond(int j) const { return chain::right_dim(site(j)); }

std::vector<Index> Mpo::bonds() const {
    std::vector<Index> b;
    for(int j = 0; j + 1 < size(); ++j) b.push_back(bond(j));
    return b;
}

Index Mpo::max_bond() const {
    Index b = 1;
    for(const auto &s : sites_) b = std::max(b, chain::right_dim(s));
    return b;
}

VecStateMps::VecStateMps(Sites sites) : sites_(std::move(sites)) { check_chain(sites_, 3, {4}, "VecStateMps"); }

VecStateMps VecStateMps::zero_product(int n) {
    Sites s;
    for(int j = 0; j < n; ++j) {
        Tensor t({1, 4, 1});
        t[0] = 1.0;
        s.push_back(std::move(t));
    }
    return VecStateMps(std::move(s));
}

VecStateMps VecStateMps::from_dense(const DenseState &state, double cutoff) {
    Tensor full({state.vec.size()});
    Eigen::Map<Vec>(full.data(), state.vec.size()) = state.vec;
    return VecStateMps(sequential_svd(std::move(full), state.n_qubits, {4}, cutoff));
}

Index VecStateMps::max_bond() const {
    Index b = 1;
    for(const auto &s : sites_) b = std::max(b, chain::right_dim(s));
    return b;
}

Lpdo::Lpdo(Sites sites) : sites_(std::move(sites)) { check_chain(sites_, 5, {0, 2, 2}, "Lpdo"); }

Index Lpdo::bond(int j) const { return chain::right_dim(site(j)); }

Mpo lpdo_to_mpo(const Lpdo &l) {
    Sites out;
    for(const auto &a : l.sites()) {
        Tensor p = einsum(a, {0, 1, 2, 3, 4}, a.conj(), {5, 1, 6, 7, 8}, {0, 5, 2, 6, 3, 7, 4, 8});
        out.push_back(std::move(p).reshaped({a.dim(0) * a.dim(0), 4, 4, a.dim(4) * a.dim(4)}));
    }
    return Mpo(std::move(out));
}

DenseSuperOp mpo_to_dense(const Mpo &m) {
    if(m.size() > kDenseSuperOpCap) throw std::invalid_argument("mpo_to_dense: qubit count exceeds oracle cap");
    Tensor acc({1, 1, 1}, {cplx{1.0}});
    for(const auto &a : m.sites()) {
        Tensor t = einsum(acc, {0, 1, 2}, a, {2, 3, 4, 5}, {0, 3, 1, 4, 5});
        acc      = std::move(t).reshaped({acc.dim(0) * 4, acc.dim(1) * 4, a.dim(3)});
    }
    return {m.size(), Mat(acc.matrix(1))};
}

DenseState mps_to_dense(const VecStateMps &s) {
    if(s.size() > kDenseStateCap) throw std::invalid_argument("mps_to_dense: qubit count exceeds oracle cap");
    Tensor acc({1, 1}, {cplx{1.0}});
    for(const auto &a : s.sites()) {
        Tensor t = einsum(acc, {0, 1}, a, {1, 2, 3}, {0, 2, 3});
        acc      = std::move(t).reshaped({acc.dim(0) * 4, a.dim(2)});
    }
    return {s.size(), Vec(acc.matrix(1))};
}

Mpo dagger(const Mpo &m) {
    Sites out;
    for(const auto &a : m.sites()) out.push_back(permute(a, {0, 2, 1, 3}).conj());
    return Mpo(std::move(out));
}

Mpo multiply(const Mpo &a, const Mpo &b) {
    if(a.size() != b.size()) throw std::invalid_argument("multiply: site count mismatch");
    Sites out;
    for(int j = 0; j < a.size(); ++j) out.push_back(mpo_product_site(a.site(j), b.site(j)));
    return Mpo(std::move(out));
}

std::pair<Mpo, TruncationReport> apply_mpo_layer(const Mpo &target, const Mpo &layer, Index max_bond, double cutoff) {
    if(target.size() != layer.size()) throw std::invalid_argument("apply_mpo_layer: site count mismatch");
    Sites out;
    auto  rep = chain::zip_up(
        out, static_cast<size_t>(target.size()),
        [&](size_t j) { return mpo_product_site(layer.site(static_cast<int>(j)), target.site(static_cast<int>(j))); },
        max_bond, cutoff);
    return {Mpo(std::move(out)), std::move(rep)};
}

std::pair<VecStateMps, TruncationReport> apply_mpo_layer(const VecStateMps &target, const Mpo &layer, Index max_bond,
                                                         double cutoff) {
    if(target.size() != layer.size()) throw std::invalid_argument("apply_mpo_layer: site count mismatch");
    Sites out;
    auto  rep = chain::zip_up(
        out, static_cast<size_t>(target.size()),
        [&](size_t j) { return mps_product_site(layer.site(static_cast<int>(j)), target.site(static_cast<int>(j))); },
        max_bond, cutoff);
    return {VecStateMps(std::move(out)), std::move(rep)};
}

cplx inner(const Mpo &a, const Mpo &b) { return chain::overlap(a.sites(), b.sites()); }
cplx inner(const VecStateMps &a, const VecStateMps &b) { return chain::overlap(a.sites(), b.sites()); }

double norm_sq(const Mpo &a) { return std::real(inner(a, a)); }

double relative_distance_mpo(const Mpo &a, const Mpo &b) { return relative_distance_sites(a.sites(), b.sites()); }

double state_distance(const VecStateMps &a, const VecStateMps &b) { return relative_distance_sites(a.sites(), b.sites()); }

cplx trace(const Mpo &m) {
    Mat env = Mat::Ones(1, 1);
    for(const auto &a : m.sites()) {
        Mat t = Mat::Zero(a.dim(0), a.dim(3));
        for(Index l = 0; l < a.dim(0); ++l)
            for(Index r = 0; r < a.dim(3); ++r)
                for(Index k = 0; k < 4; ++k) t(l, r) += a(l, k, k, r);
        env = env * t;
    }
    return env(0, 0);
}

std::pair<Mpo, TruncationReport> truncate(const Mpo &m, Index max_bond, double cutoff) {
    Sites s   = m.sites();
    auto  rep = chain::truncate(s, max_bond, cutoff);
    return {Mpo(std::move(s)), std::move(rep)};
}

void canonicalize(Mpo &m, int center) { chain::canonicalize(m.sites(), center); }

double trace_infidelity_mpo(const Mpo &m) {
    // row vector <<1| m as an MPS over the input index
    Sites row;
    for(const auto &a : m.sites()) {
        Tensor v({a.dim(0), 4, a.dim(3)});
        for(Index l = 0; l < a.dim(0); ++l)
            for(Index s = 0; s < 4; ++s)
                for(Index r = 0; r < a.dim(3); ++r) v(l, s, r) = a(l, 0, s, r) + a(l, 3, s, r);
        row.push_back(std::move(v));
    }
    return chain::distance_sq(row, ones_chain(m.size())) / std::pow(2.0, m.size());
}

cplx state_trace(const VecStateMps &s) { return chain::overlap(s.sites(), ones_chain(s.size())); }

void apply_one_site(VecStateMps &s, const Mat &g4, int q) {
    const Tensor g = mat_tensor(g4, {4, 4});
    s.site(q)      = einsum(g, {0, 1}, s.site(q), {2, 1, 3}, {2, 0, 3});
}

double apply_two_site(VecStateMps &s, const Mat &g16, int q, Index max_bond, double cutoff) {
    const Tensor &a     = s.site(q);
    const Tensor &b     = s.site(q + 1);
    const Tensor  theta = einsum(a, {0, 1, 2}, b, {2, 3, 4}, {0, 1, 3, 4});
    const Tensor  g     = mat_tensor(g16, {4, 4, 4, 4});
    const Tensor  out   = einsum(g, {5, 6, 1, 3}, theta, {0, 1, 3, 4}, {0, 5, 6, 4});
    const Index   l = a.dim(0), r = b.dim(2);
    auto          svd = truncated_svd(out.matrix(2), max_bond, cutoff);
    const Index   k   = svd.s.size();
    s.site(q)         = Tensor::from_matrix(svd.u, {l, 4, k});
    s.site(q + 1)     = Tensor::from_matrix(svd.s.cast<cplx>().asDiagonal() * svd.vh, {k, 4, r});
    return svd.discarded;
}

} // namespace qem
