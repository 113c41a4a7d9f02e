#include "qem/pepo.hpp"

#include "qem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qem {

namespace {

constexpr GateKind    kSingleGates[] = {GateKind::Z, GateKind::H, GateKind::S, GateKind::T};
constexpr NoiseFamily kFamilies[]    = {NoiseFamily::Depolarizing, NoiseFamily::Dephasing, NoiseFamily::BitFlip,
                                        NoiseFamily::AmplitudeDamping};

std::optional<NoiseSpec> draw_noise(const NoiseProfile &p, int arity, std::mt19937_64 &rng) {
    if(p.mode == NoiseProfile::Mode::None) return std::nullopt;
    NoiseFamily family = p.family;
    if(p.mode == NoiseProfile::Mode::Mixed) family = kFamilies[std::uniform_int_distribution<int>(0, 3)(rng)];
    const double rate = sample_rate(arity == 2 ? p.eps2 : p.one_qubit_rate(), rng);
    if(rate == 0.0) return std::nullopt;
    return NoiseSpec{family_kind(family, arity), rate};
}

Mat block_of(const Gate2D &g) {
    Mat m = make_gate_superop(g.gate).matrix;
    if(g.noise) {
        if(noise_arity(g.noise->kind) != gate_arity(g.gate)) throw std::invalid_argument("Gate2D: noise arity differs from gate arity");
        m = make_noise_superop(g.noise->kind, g.noise->rate).matrix * m;
    }
    return m;
}

// g[(a b), (a' b')] -> g[(b a), (b' a')]
Mat swap_pair(const Mat &g16) {
    Mat out(16, 16);
    for(int a = 0; a < 4; ++a)
        for(int b = 0; b < 4; ++b)
            for(int x = 0; x < 4; ++x)
                for(int y = 0; y < 4; ++y) out(b * 4 + a, y * 4 + x) = g16(a * 4 + b, x * 4 + y);
    return out;
}

std::vector<int> move_to_back(int rank, int axis) {
    std::vector<int> p;
    for(int i = 0; i < rank; ++i)
        if(i != axis) p.push_back(i);
    p.push_back(axis);
    return p;
}

std::vector<int> move_to_front(int rank, int axis) {
    std::vector<int> p{axis};
    for(int i = 0; i < rank; ++i)
        if(i != axis) p.push_back(i);
    return p;
}

std::vector<int> inverse_perm(const std::vector<int> &p) {
    std::vector<int> inv(p.size());
    for(size_t i = 0; i < p.size(); ++i) inv[static_cast<size_t>(p[i])] = static_cast<int>(i);
    return inv;
}

// Recompresses the link between axis `axis_a` of a and axis `axis_b` of b.
double compress_link(Tensor &a, int axis_a, Tensor &b, int axis_b, Index max_bond, double cutoff) {
    const auto pa = move_to_back(a.rank(), axis_a);
    const auto pb = move_to_front(b.rank(), axis_b);
    Tensor     ta = permute(a, pa);
    Tensor     tb = permute(b, pb);
    const auto qa = thin_qr(ta.matrix(a.rank() - 1));
    const auto lb = thin_lq(tb.matrix(1));
    auto       svd = truncated_svd(qa.r * lb.r, max_bond, cutoff);
    const Index k  = svd.s.size();
    const Eigen::VectorXd sq = svd.s.cwiseSqrt();
    Mat        na  = qa.q * svd.u * sq.cast<cplx>().asDiagonal();
    Mat        nb  = sq.cast<cplx>().asDiagonal() * svd.vh * lb.q;
    auto       da  = ta.dims();
    auto       db  = tb.dims();
    da.back()      = k;
    db.front()     = k;
    a = permute(Tensor::from_matrix(na, da), inverse_perm(pa));
    b = permute(Tensor::from_matrix(nb, db), inverse_perm(pb));
    return svd.discarded;
}

// local 4x4 map applied on the output side of a site
Tensor apply_out(const Mat &g4, const Tensor &site) {
    const Tensor g = Tensor::from_matrix(g4, {4, 4});
    return einsum(g, {4, 6}, site, {0, 1, 2, 3, 6, 5}, {0, 1, 2, 3, 4, 5});
}

// Fused network site for sum_{t,s} a[.., t, s] * conj(b[.., t, s]): legs (a, b) per direction.
Tensor fuse_pair(const Tensor &a, const Tensor &b) {
    const Tensor f = einsum(a, {0, 1, 2, 3, 8, 9}, b.conj(), {4, 5, 6, 7, 8, 9}, {0, 4, 1, 5, 2, 6, 3, 7});
    return f.reshaped({a.dim(0) * b.dim(0), a.dim(1) * b.dim(1), a.dim(2) * b.dim(2), a.dim(3) * b.dim(3)});
}

// Tr-network site for sum_{t,s} x[.., t, s] u[.., s, t]: legs (x, u).
Tensor fuse_trace(const Tensor &x, const Tensor &u) {
    const Tensor f = einsum(x, {0, 1, 2, 3, 8, 9}, u, {4, 5, 6, 7, 9, 8}, {0, 4, 1, 5, 2, 6, 3, 7});
    return f.reshaped({x.dim(0) * u.dim(0), x.dim(1) * u.dim(1), x.dim(2) * u.dim(2), x.dim(3) * u.dim(3)});
}

// Quadratic network site for sum_{t,a,b} x[.., t, a] w[.., a, b] conj(x[.., t, b]): legs (x', w, x).
Tensor fuse_quad(const Tensor &x, const Tensor &w) {
    const Tensor xw = einsum(x, {0, 1, 2, 3, 4, 5}, w, {6, 7, 8, 9, 5, 10}, {0, 1, 2, 3, 4, 6, 7, 8, 9, 10});
    const Tensor f  = einsum(xw, {0, 1, 2, 3, 4, 6, 7, 8, 9, 10}, x.conj(), {11, 12, 13, 14, 4, 10},
                             {11, 6, 0, 12, 7, 1, 13, 8, 2, 14, 9, 3});
    std::vector<Index> d(4);
    for(int k = 0; k < 4; ++k) d[static_cast<size_t>(k)] = x.dim(k) * w.dim(k) * x.dim(k);
    return f.reshaped(d);
}

TensorGrid pair_grid(const Pepo &a, const Pepo &b) {
    TensorGrid g(a.rows(), a.cols());
    for(int r = 0; r < a.rows(); ++r)
        for(int c = 0; c < a.cols(); ++c) g.at(r, c) = fuse_pair(a.site(r, c), b.site(r, c));
    return g;
}

void check_same_grid(const Pepo &a, const Pepo &b) {
    if(a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("pepo: grid shapes differ");
}

// <<1| p with a unit output leg: (u, d, l, r, 1, in)
Tensor trace_row(const Tensor &p) {
    Tensor v({p.dim(0), p.dim(1), p.dim(2), p.dim(3), 1, 4});
    const Index outer = p.size() / 16;
    for(Index o = 0; o < outer; ++o)
        for(Index s = 0; s < 4; ++s) v[o * 4 + s] = p[o * 16 + s] + p[o * 16 + 12 + s];
    return v;
}

Tensor identity_row_site() {
    Tensor v({1, 1, 1, 1, 1, 4});
    v[0] = 1.0;
    v[3] = 1.0;
    return v;
}

} // namespace

Pepo::Pepo(int rows, int cols, std::vector<Tensor> sites) : rows_(rows), cols_(cols), sites_(std::move(sites)) {
    validate();
}

Pepo Pepo::identity(int rows, int cols) {
    return product(rows, cols, std::vector<Mat>(static_cast<size_t>(rows * cols), Mat::Identity(4, 4)));
}

Pepo Pepo::product(int rows, int cols, const std::vector<Mat> &local) {
    if(static_cast<int>(local.size()) != rows * cols) throw std::invalid_argument("Pepo::product: wrong number of local maps");
    std::vector<Tensor> s;
    for(const auto &m : local) {
        if(m.rows() != 4 || m.cols() != 4) throw std::invalid_argument("Pepo::product: local maps must be 4x4");
        s.push_back(Tensor::from_matrix(m, {1, 1, 1, 1, 4, 4}));
    }
    return {rows, cols, std::move(s)};
}

Index Pepo::max_bond() const {
    Index m = 1;
    for(const auto &s : sites_)
        for(int k = 0; k < 4; ++k) m = std::max(m, s.dim(k));
    return m;
}

void Pepo::validate() const {
    if(rows_ < 1 || cols_ < 1) throw std::invalid_argument("Pepo: empty grid");
    if(static_cast<int>(sites_.size()) != rows_ * cols_) throw std::invalid_argument("Pepo: wrong site count");
    for(const auto &s : sites_)
        if(s.rank() != 6 || s.dim(4) != 4 || s.dim(5) != 4) throw std::invalid_argument("Pepo: sites must be (u, d, l, r, 4, 4)");
    TensorGrid g(rows_, cols_);
    for(int r = 0; r < rows_; ++r)
        for(int c = 0; c < cols_; ++c) {
            const Tensor &s = site(r, c);
            g.at(r, c)      = Tensor({s.dim(0), s.dim(1), s.dim(2), s.dim(3)});
        }
    g.validate();
}

Circuit2D generate_test_circuit_2d(int rows, int cols, int depth, std::uint64_t seed, const NoiseProfile &noise) {
    if(rows < 2 || cols < 2) throw std::invalid_argument("generate_test_circuit_2d: grid must be at least 2x2");
    if(depth < 1) throw std::invalid_argument("generate_test_circuit_2d: depth must be >= 1");
    std::mt19937_64 rng(derive_seed(seed, 0));
    Circuit2D       circ;
    circ.rows = rows;
    circ.cols = cols;
    circ.seed = seed;
    auto q    = [cols](int r, int c) { return r * cols + c; };
    for(int l = 0; l < depth; ++l) {
        std::vector<Gate2D> layer;
        if(l % 2 == 0) {
            const int  t          = l / 2;
            const bool horizontal = t % 2 == 0;
            const int  offset     = (t / 2) % 2;
            if(horizontal) {
                for(int r = 0; r < rows; ++r)
                    for(int c = offset; c + 1 < cols; c += 2)
                        layer.push_back({GateKind::CNOT, q(r, c), q(r, c + 1), draw_noise(noise, 2, rng)});
            } else {
                for(int c = 0; c < cols; ++c)
                    for(int r = offset; r + 1 < rows; r += 2)
                        layer.push_back({GateKind::CNOT, q(r, c), q(r + 1, c), draw_noise(noise, 2, rng)});
            }
        } else {
            std::uniform_int_distribution<int> pick(0, 3);
            for(int k = 0; k < rows * cols; ++k) {
                const GateKind g = kSingleGates[pick(rng)];
                layer.push_back({g, k, -1, draw_noise(noise, 1, rng)});
            }
        }
        circ.layers.push_back(std::move(layer));
    }
    return circ;
}

Circuit2D strip_noise(const Circuit2D &c) {
    Circuit2D out = c;
    for(auto &layer : out.layers)
        for(auto &g : layer) g.noise.reset();
    return out;
}

Pepo pepo_from_circuit_2d(const Circuit2D &circ, Index max_bond, double cutoff) {
    Pepo p = Pepo::identity(circ.rows, circ.cols);
    for(const auto &layer : circ.layers) {
        for(const auto &g : layer) {
            const int r0 = g.q0 / circ.cols, c0 = g.q0 % circ.cols;
            if(g.q0 < 0 || g.q0 >= circ.n_qubits()) throw std::invalid_argument("pepo_from_circuit_2d: qubit outside the grid");
            Mat blk = block_of(g);
            if(gate_arity(g.gate) == 1) {
                p.site(r0, c0) = apply_out(blk, p.site(r0, c0));
                continue;
            }
            int qa = g.q0, qb = g.q1;
            if(qb < 0 || qb >= circ.n_qubits()) throw std::invalid_argument("pepo_from_circuit_2d: qubit outside the grid");
            if(qb < qa) {
                std::swap(qa, qb);
                blk = swap_pair(blk);
            }
            const int ra = qa / circ.cols, ca = qa % circ.cols, rb = qb / circ.cols, cb = qb % circ.cols;
            const bool horizontal = ra == rb && cb == ca + 1;
            const bool vertical   = ca == cb && rb == ra + 1;
            if(!horizontal && !vertical) throw std::invalid_argument("pepo_from_circuit_2d: two-qubit gate on non-neighbours");
            auto [ga, gb] = split_two_site(blk, cutoff);
            const Index k = ga.dim(3);
            Tensor     &a = p.site(ra, ca);
            Tensor     &b = p.site(rb, cb);
            // ga (1, t, m, k), gb (k, t, m, 1)
            const Tensor fa = ga.reshaped({4, 4, k});
            const Tensor fb = gb.reshaped({k, 4, 4});
            if(horizontal) {
                Tensor na = einsum(fa, {4, 6, 7}, a, {0, 1, 2, 3, 6, 5}, {0, 1, 2, 3, 7, 4, 5});
                Tensor nb = einsum(fb, {7, 4, 6}, b, {0, 1, 2, 3, 6, 5}, {0, 1, 2, 7, 3, 4, 5});
                a         = na.reshaped({a.dim(0), a.dim(1), a.dim(2), a.dim(3) * k, 4, 4});
                b         = nb.reshaped({b.dim(0), b.dim(1), b.dim(2) * k, b.dim(3), 4, 4});
                compress_link(a, 3, b, 2, max_bond, cutoff);
            } else {
                Tensor na = einsum(fa, {4, 6, 7}, a, {0, 1, 2, 3, 6, 5}, {0, 1, 7, 2, 3, 4, 5});
                Tensor nb = einsum(fb, {7, 4, 6}, b, {0, 1, 2, 3, 6, 5}, {0, 7, 1, 2, 3, 4, 5});
                a         = na.reshaped({a.dim(0), a.dim(1) * k, a.dim(2), a.dim(3), 4, 4});
                b         = nb.reshaped({b.dim(0) * k, b.dim(1), b.dim(2), b.dim(3), 4, 4});
                compress_link(a, 1, b, 0, max_bond, cutoff);
            }
        }
    }
    return p;
}

DenseSuperOp compile_dense_2d(const Circuit2D &circ) {
    if(circ.n_qubits() > kDenseSuperOpCap) throw std::invalid_argument("compile_dense_2d: too many qubits for the dense oracle");
    DenseSuperOp op = DenseSuperOp::identity(circ.n_qubits());
    for(const auto &layer : circ.layers)
        for(const auto &g : layer) {
            if(gate_arity(g.gate) == 1) apply_local(op, block_of(g), g.q0);
            else apply_two_qubit(op, block_of(g), g.q0, g.q1);
        }
    return op;
}

DenseSuperOp pepo_to_dense(const Pepo &p) {
    if(p.n_qubits() > kDenseSuperOpCap) throw std::invalid_argument("pepo_to_dense: too many qubits for the dense form");
    const int rows = p.rows(), cols = p.cols();
    // accumulated tensor: (out, in, open legs...), open legs labelled 10 + 2 * site + {0: down, 1: right}
    Tensor           acc({1, 1}, {cplx(1.0)});
    std::vector<int> open;
    for(int r = 0; r < rows; ++r)
        for(int c = 0; c < cols; ++c) {
            const int          k = r * cols + c;
            const Tensor      &s = p.site(r, c);
            std::vector<int>   labels;
            std::vector<Index> dims;
            auto add = [&](int axis, bool present, int label) {
                if(present) {
                    labels.push_back(label);
                    dims.push_back(s.dim(axis));
                }
            };
            add(0, r > 0, 10 + 2 * ((r - 1) * cols + c));
            add(1, r + 1 < rows, 10 + 2 * k);
            add(2, c > 0, 10 + 2 * (k - 1) + 1);
            add(3, c + 1 < cols, 10 + 2 * k + 1);
            labels.push_back(2);
            labels.push_back(3);
            dims.push_back(4);
            dims.push_back(4);
            const Tensor site = s.reshaped(dims);

            std::vector<int> acc_labels{0, 1};
            acc_labels.insert(acc_labels.end(), open.begin(), open.end());
            std::vector<int> next_open;
            for(int l : open)
                if(std::find(labels.begin(), labels.end(), l) == labels.end()) next_open.push_back(l);
            for(size_t i = 0; i + 2 < labels.size(); ++i)
                if(std::find(open.begin(), open.end(), labels[i]) == open.end()) next_open.push_back(labels[i]);
            std::vector<int> out{0, 2, 1, 3};
            out.insert(out.end(), next_open.begin(), next_open.end());
            Tensor             t = einsum(acc, acc_labels, site, labels, out);
            std::vector<Index> nd{t.dim(0) * 4, t.dim(2) * 4};
            for(int i = 4; i < t.rank(); ++i) nd.push_back(t.dim(i));
            acc  = t.reshaped(nd);
            open = next_open;
        }
    return {p.n_qubits(), Mat(acc.matrix(1))};
}

Pepo multiply(const Pepo &a, const Pepo &b) {
    check_same_grid(a, b);
    std::vector<Tensor> s;
    for(int r = 0; r < a.rows(); ++r)
        for(int c = 0; c < a.cols(); ++c) {
            const Tensor &x = a.site(r, c);
            const Tensor &y = b.site(r, c);
            Tensor        t = einsum(x, {0, 1, 2, 3, 4, 5}, y, {6, 7, 8, 9, 5, 10}, {0, 6, 1, 7, 2, 8, 3, 9, 4, 10});
            s.push_back(t.reshaped({x.dim(0) * y.dim(0), x.dim(1) * y.dim(1), x.dim(2) * y.dim(2), x.dim(3) * y.dim(3), 4, 4}));
        }
    return {a.rows(), a.cols(), std::move(s)};
}

Pepo dagger(const Pepo &p) {
    std::vector<Tensor> s;
    for(int r = 0; r < p.rows(); ++r)
        for(int c = 0; c < p.cols(); ++c) s.push_back(permute(p.site(r, c), {0, 1, 2, 3, 5, 4}).conj());
    return {p.rows(), p.cols(), std::move(s)};
}

TruncationReport compress_links(Pepo &p, Index max_bond, double cutoff) {
    TruncationReport rep;
    for(int r = 0; r < p.rows(); ++r)
        for(int c = 0; c + 1 < p.cols(); ++c)
            rep.discarded.push_back(compress_link(p.site(r, c), 3, p.site(r, c + 1), 2, max_bond, cutoff));
    for(int r = 0; r + 1 < p.rows(); ++r)
        for(int c = 0; c < p.cols(); ++c)
            rep.discarded.push_back(compress_link(p.site(r, c), 1, p.site(r + 1, c), 0, max_bond, cutoff));
    return rep;
}

cplx inner(const Pepo &a, const Pepo &b, const BoundaryContractionConfig &cfg) {
    check_same_grid(a, b);
    return contract_grid(pair_grid(a, b), cfg);
}

double relative_distance_pepo(const Pepo &a, const Pepo &b, const BoundaryContractionConfig &cfg) {
    const double na = std::real(inner(a, a, cfg));
    const double nb = std::real(inner(b, b, cfg));
    const double ab = std::real(inner(a, b, cfg));
    return (na + nb - 2.0 * ab) / std::sqrt(na * nb);
}

double trace_infidelity_pepo(const Pepo &p, const BoundaryContractionConfig &cfg) {
    TensorGrid   vv(p.rows(), p.cols()), v1(p.rows(), p.cols());
    const Tensor e = identity_row_site();
    for(int r = 0; r < p.rows(); ++r)
        for(int c = 0; c < p.cols(); ++c) {
            const Tensor s = trace_row(p.site(r, c));
            vv.at(r, c)    = fuse_pair(s, s);
            v1.at(r, c)    = fuse_pair(s, e);
        }
    const double nv = std::real(contract_grid(vv, cfg));
    const double ov = std::real(contract_grid(v1, cfg));
    const double dim = std::pow(2.0, p.n_qubits());
    return std::max(0.0, nv - 2.0 * ov + dim) / dim;
}

double norm_self_consistency(const Pepo &p, const BoundaryContractionConfig &cfg) {
    return contraction_self_consistency(pair_grid(p, p), cfg);
}

Pepo initial_inverse_guess(const Pepo &u, Index bond) {
    if(bond < 1) throw std::invalid_argument("initial_inverse_guess: bond must be >= 1");
    Pepo x = dagger(u);
    compress_links(x, bond, kDefaultCutoff);
    return x;
}

std::pair<Pepo, PepoInverseReport> pepo_inverse(const Pepo &u, Index bond, const BoundaryContractionConfig &cfg,
                                                int max_sweeps, double tol) {
    if(max_sweeps < 0) throw std::invalid_argument("pepo_inverse: max_sweeps must be >= 0");
    Pepo w = multiply(u, dagger(u));
    compress_links(w, 0, kDefaultCutoff);
    Pepo x = initial_inverse_guess(u, bond);

    const int    rows = u.rows(), cols = u.cols();
    const double cn   = std::pow(4.0, u.n_qubits());
    TensorGrid   qg(rows, cols), lg(rows, cols);
    for(int r = 0; r < rows; ++r)
        for(int c = 0; c < cols; ++c) {
            qg.at(r, c) = fuse_quad(x.site(r, c), w.site(r, c));
            lg.at(r, c) = fuse_trace(x.site(r, c), u.site(r, c));
        }
    GridContraction quad(std::move(qg), cfg), lin(std::move(lg), cfg);

    PepoInverseReport rep;
    rep.normalization = cn;
    auto record       = [&] {
        const double q = std::real(quad.value());
        const double e = q - 2.0 * std::real(lin.value()) + cn;
        rep.error_history.push_back(e / cn);
        rep.distance_history.push_back(e / std::sqrt(std::abs(q) * cn));
        rep.trace_infidelity_history.push_back(trace_infidelity_pepo(x, cfg));
        return e;
    };

    double prev = record();
    for(int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for(int r = 0; r < rows; ++r)
            for(int c = 0; c < cols; ++c) {
                const Tensor &xs = x.site(r, c);
                const Tensor &ws = w.site(r, c);
                const Tensor &us = u.site(r, c);

                std::vector<Index> dq, dl;
                for(int k = 0; k < 4; ++k) {
                    dq.insert(dq.end(), {xs.dim(k), ws.dim(k), xs.dim(k)});
                    dl.insert(dl.end(), {xs.dim(k), us.dim(k)});
                }
                const Tensor eq = quad.environment(r, c).reshaped(dq);
                const Tensor g  = einsum(eq, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, ws, {1, 4, 7, 10, 12, 13},
                                         {0, 3, 6, 9, 13, 2, 5, 8, 11, 12});
                Mat gm = g.matrix(5);
                gm     = (0.5 * (gm + gm.adjoint())).eval();

                const Tensor el = lin.environment(r, c).reshaped(dl);
                const Tensor k  = einsum(el, {0, 1, 2, 3, 4, 5, 6, 7}, us, {1, 3, 5, 7, 9, 8}, {0, 2, 4, 6, 9, 8});
                const Mat    rhs = Mat(k.matrix(5)).conjugate(); // rows (u, d, l, r, s), columns t

                const Mat sol = solve_hermitian_psd(gm, rhs, 1e-12);
                const double e = std::real((sol.adjoint() * gm * sol).trace()) -
                                 2.0 * std::real(rhs.conjugate().cwiseProduct(sol).sum()) + cn;
                rep.site_errors.push_back(e / cn);

                Tensor xn = permute(Tensor::from_matrix(sol, {xs.dim(0), xs.dim(1), xs.dim(2), xs.dim(3), 4, 4}),
                                    {0, 1, 2, 3, 5, 4});
                quad.set_site(r, c, fuse_quad(xn, ws));
                lin.set_site(r, c, fuse_trace(xn, us));
                x.site(r, c) = std::move(xn);
            }
        const double e  = record();
        rep.sweeps_used = sweep;
        const bool done = std::abs(e - prev) / cn < tol;
        prev            = e;
        if(done) {
            rep.converged = true;
            break;
        }
    }
    rep.final_error        = prev;
    rep.boundary_discarded = quad.discarded() + lin.discarded();
    return {std::move(x), std::move(rep)};
}

} // namespace qem
