#include "doctest.h"
#include "oracle.hpp"

#include "qem/channels.hpp"
#include "qem/linalg.hpp"
#include "qem/mpo.hpp"

#include <random>

using namespace qem;

namespace {

Tensor random_tensor(std::vector<Index> dims, std::mt19937_64 &rng) {
    Tensor                           t(std::move(dims));
    std::normal_distribution<double> g;
    for(Index i = 0; i < t.size(); ++i) t[i] = cplx(g(rng), g(rng));
    return t;
}

Mpo random_mpo(int n, Index bond, std::mt19937_64 &rng) {
    Sites s;
    for(int j = 0; j < n; ++j) s.push_back(random_tensor({j == 0 ? 1 : bond, 4, 4, j == n - 1 ? 1 : bond}, rng));
    return Mpo(std::move(s));
}

DenseSuperOp random_channel_op(int n, std::mt19937_64 &rng) {
    return superop_from_kraus(oracle::random_channel(n, 2, rng));
}

} // namespace

TEST_CASE("permute and einsum agree with explicit loops") {
    std::mt19937_64 rng(1);
    const Tensor    a = random_tensor({2, 3, 4}, rng);
    const Tensor    p = permute(a, {2, 0, 1});
    for(Index i = 0; i < 2; ++i)
        for(Index j = 0; j < 3; ++j)
            for(Index k = 0; k < 4; ++k) CHECK(p(k, i, j) == a(i, j, k));

    const Tensor b = random_tensor({4, 3, 5}, rng);
    const Tensor c = einsum(a, {0, 1, 2}, b, {2, 1, 3}, {3, 0});
    for(Index x = 0; x < 5; ++x)
        for(Index i = 0; i < 2; ++i) {
            cplx s = 0.0;
            for(Index j = 0; j < 3; ++j)
                for(Index k = 0; k < 4; ++k) s += a(i, j, k) * b(k, j, x);
            CHECK(std::abs(c(x, i) - s) <= 1e-12);
        }
    const Tensor d = contract(a, {2}, b, {0});
    CHECK(d.dims() == std::vector<Index>{2, 3, 3, 5});
    CHECK(std::abs(d(1, 2, 0, 4) - [&] {
              cplx s = 0.0;
              for(Index k = 0; k < 4; ++k) s += a(1, 2, k) * b(k, 0, 4);
              return s;
          }()) <= 1e-12);
    CHECK(fuse(a, {2, 1}).dims() == std::vector<Index>{6, 4});
    CHECK_THROWS(static_cast<void>(a.reshaped({5, 5})));
}

TEST_CASE("truncated SVD honours the cutoff and the cap") {
    std::mt19937_64 rng(2);
    const Mat       u = oracle::random_unitary(6, rng), v = oracle::random_unitary(5, rng);
    Mat             s = Mat::Zero(6, 5);
    const double    sv[5] = {1.0, 0.5, 1e-3, 1e-9, 1e-16};
    for(int i = 0; i < 5; ++i) s(i, i) = sv[i];
    const Mat m = u * s * v.adjoint();

    auto full = truncated_svd(m, 0, 1e-14);
    CHECK(full.s.size() == 4);
    CHECK(full.discarded == doctest::Approx(1e-32).epsilon(0.5));
    auto capped = truncated_svd(m, 2, 1e-14);
    CHECK(capped.s.size() == 2);
    CHECK(capped.discarded == doctest::Approx(1e-6 + 1e-18).epsilon(1e-9));
    CHECK((capped.u * capped.s.cast<cplx>().asDiagonal() * capped.vh - m).norm() == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(truncated_svd(Mat::Zero(3, 3), 0, 1e-14).s.size() == 1);
}

TEST_CASE("QR, LQ and the PSD solver") {
    std::mt19937_64 rng(3);
    const Mat       m  = oracle::random_matrix(6, 4, rng);
    const auto      qr = thin_qr(m);
    CHECK((qr.q * qr.r - m).norm() <= 1e-13);
    CHECK((qr.q.adjoint() * qr.q - Mat::Identity(4, 4)).norm() <= 1e-13);
    const auto lq = thin_lq(m.adjoint());
    CHECK((lq.r * lq.q - m.adjoint()).norm() <= 1e-13);
    const Mat comp = orthonormal_completion(qr.q, 6);
    CHECK(comp.cols() == 2);
    CHECK((qr.q.adjoint() * comp).norm() <= 1e-13);

    // singular PSD system: minimum-norm solution lies in the range
    const Mat a   = oracle::random_matrix(5, 3, rng);
    const Mat g   = a * a.adjoint();
    const Mat rhs = g * oracle::random_matrix(5, 2, rng);
    const Mat x   = solve_hermitian_psd(g, rhs);
    CHECK((g * x - rhs).norm() <= 1e-10 * rhs.norm());
    const Mat pinv = g.completeOrthogonalDecomposition().pseudoInverse();
    CHECK((x - pinv * rhs).norm() <= 1e-9 * x.norm());
}

TEST_CASE("canonical forms and exact truncation preserve the chain") {
    std::mt19937_64 rng(4);
    const Mpo       m   = random_mpo(5, 3, rng);
    const Mat       ref = mpo_to_dense(m).matrix;
    for(int c : {0, 2, 4}) {
        Mpo g = m;
        canonicalize(g, c);
        CHECK((mpo_to_dense(g).matrix - ref).norm() <= 1e-11 * ref.norm());
        for(int j = 0; j < c; ++j) CHECK(chain::isometry_residual(g.site(j), true) <= 1e-12);
        for(int j = c + 1; j < 5; ++j) CHECK(chain::isometry_residual(g.site(j), false) <= 1e-12);
    }
    auto [t, rep] = truncate(m, 0);
    CHECK((mpo_to_dense(t).matrix - ref).norm() <= 1e-11 * ref.norm());
    CHECK(rep.total() <= 1e-20 * ref.squaredNorm());

    // truncation error equals the discarded weight for a canonical chain
    auto [t2, rep2] = truncate(m, 2);
    CHECK(t2.max_bond() <= 2);
    CHECK((mpo_to_dense(t2).matrix - ref).squaredNorm() == doctest::Approx(rep2.total()).epsilon(1e-6));
}

TEST_CASE("MPO from dense round-trips and is compact for product channels") {
    std::mt19937_64 rng(5);
    const auto      op = random_channel_op(3, rng);
    const Mpo       m  = Mpo::from_dense(op);
    m.validate();
    CHECK((mpo_to_dense(m).matrix - op.matrix).norm() <= 1e-12);

    std::vector<Mat> local;
    for(int j = 0; j < 3; ++j) local.push_back(random_channel_op(1, rng).matrix);
    const Mpo prod = Mpo::from_dense(DenseSuperOp(3, oracle::kron(oracle::kron(local[0], local[1]), local[2])));
    CHECK(prod.max_bond() == 1);
    CHECK((mpo_to_dense(Mpo::product(local)).matrix - oracle::kron(oracle::kron(local[0], local[1]), local[2])).norm() <= 1e-13);
    CHECK((mpo_to_dense(Mpo::identity(3)).matrix - Mat::Identity(64, 64)).norm() == 0.0);
}

TEST_CASE("MPO algebra agrees with dense algebra") {
    std::mt19937_64 rng(6);
    const Mpo       a  = random_mpo(3, 2, rng);
    const Mpo       b  = random_mpo(3, 3, rng);
    const Mat       da = mpo_to_dense(a).matrix, db = mpo_to_dense(b).matrix;
    CHECK((mpo_to_dense(multiply(a, b)).matrix - da * db).norm() <= 1e-11 * (da * db).norm());
    CHECK((mpo_to_dense(dagger(a)).matrix - da.adjoint()).norm() <= 1e-12 * da.norm());
    CHECK(std::abs(inner(a, b) - (da * db.adjoint()).trace()) <= 1e-10 * da.norm() * db.norm());
    CHECK(norm_sq(a) == doctest::Approx(da.squaredNorm()).epsilon(1e-12));
    CHECK(relative_distance_mpo(a, b) == doctest::Approx(oracle::rel_dist(da, db)).epsilon(1e-10));
    CHECK(std::abs(trace(a) - da.trace()) <= 1e-10 * da.norm());

    auto [c, rep] = apply_mpo_layer(b, a, 0);
    CHECK((mpo_to_dense(c).matrix - da * db).norm() <= 1e-10 * (da * db).norm());
    auto [c2, rep2] = apply_mpo_layer(b, a, 2);
    CHECK(c2.max_bond() <= 2);
    CHECK(rep2.total() > 0.0);
}

TEST_CASE("trace infidelity of MPOs matches the dense value") {
    std::mt19937_64 rng(7);
    for(int n = 1; n <= 3; ++n) {
        const Mpo a = random_mpo(n, 2, rng);
        CHECK(trace_infidelity_mpo(a) == doctest::Approx(trace_infidelity(mpo_to_dense(a))).epsilon(1e-10));
    }
    const auto ch = random_channel_op(3, rng);
    CHECK(trace_infidelity_mpo(Mpo::from_dense(ch)) <= 1e-24);
}

TEST_CASE("cancellation-free distance resolves tiny differences") {
    std::mt19937_64 rng(8);
    const Mpo       a = random_mpo(4, 2, rng);
    Mpo             b = a;
    b.site(2)(0, 1, 2, 0) += 1e-9;
    // a - b is a with site 2 replaced by the single perturbed entry
    Mpo delta = a;
    delta.site(2) = Tensor(a.site(2).dims());
    delta.site(2)(0, 1, 2, 0) = 1e-9;
    const double ref = norm_sq(delta);
    CHECK(ref > 0.0);
    CHECK(chain::distance_sq(a.sites(), b.sites()) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("vectorized-state MPS") {
    std::mt19937_64  rng(9);
    const Mat        rho = oracle::random_density(3, rng);
    const DenseState ds  = DenseState::from_density(rho);
    const auto       s   = VecStateMps::from_dense(ds);
    CHECK((mps_to_dense(s).vec - ds.vec).norm() <= 1e-13);
    CHECK(std::abs(state_trace(s) - 1.0) <= 1e-13);
    CHECK((mps_to_dense(VecStateMps::zero_product(3)).vec - DenseState::zero_product(3).vec).norm() == 0.0);

    const auto op      = random_channel_op(3, rng);
    auto [out, rep]    = apply_mpo_layer(s, Mpo::from_dense(op), 0);
    CHECK((mps_to_dense(out).vec - apply(op, ds).vec).norm() <= 1e-12);

    VecStateMps t = s;
    chain::canonicalize(t.sites(), 1);
    const Mat cnot = make_gate_superop(GateKind::CNOT).matrix;
    apply_two_site(t, cnot, 1, 0, 1e-14);
    DenseSuperOp full = DenseSuperOp::identity(3);
    apply_local(full, cnot, 1);
    CHECK((mps_to_dense(t).vec - apply(full, ds).vec).norm() <= 1e-12);
    const Mat h = make_gate_superop(GateKind::H).matrix;
    apply_one_site(t, h, 0);
    apply_local(full, h, 0);
    CHECK((mps_to_dense(t).vec - apply(full, ds).vec).norm() <= 1e-12);
    CHECK(state_distance(t, t) <= 1e-28);
}

TEST_CASE("LPDO contracts to a completely positive MPO") {
    std::mt19937_64 rng(10);
    Sites           s;
    for(int j = 0; j < 3; ++j) s.push_back(random_tensor({j == 0 ? 1 : 2, 3, 2, 2, j == 2 ? 1 : 2}, rng));
    const Lpdo l(std::move(s));
    CHECK(l.bond(0) == 2);
    const Mpo m = lpdo_to_mpo(l);
    m.validate();
    Eigen::SelfAdjointEigenSolver<Mat> es(choi_matrix(mpo_to_dense(m)));
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
}

TEST_CASE("zip-up builds the exact product chain") {
    std::mt19937_64 rng(11);
    const Mpo       a = random_mpo(4, 2, rng), b = random_mpo(4, 2, rng);
    const Mpo       ab = multiply(a, b);
    Sites           out;
    auto rep = chain::zip_up(out, 4, [&](size_t j) { return ab.sites()[j]; }, 0, 1e-14);
    CHECK(rep.discarded.size() >= 3);
    const Mat ref = mpo_to_dense(ab).matrix;
    CHECK((mpo_to_dense(Mpo(out)).matrix - ref).norm() <= 1e-11 * ref.norm());
}
