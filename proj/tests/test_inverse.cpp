#include "doctest.h"
#include "oracle.hpp"

#include "qem/circuit.hpp"
#include "qem/inverse.hpp"

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

double brute_error(const Mpo &x, const Mat &u) {
    const Mat xu = mpo_to_dense(x).matrix * u;
    return (xu - Mat::Identity(xu.rows(), xu.cols())).squaredNorm();
}

NoiseProfile family(NoiseFamily f, double eps2) {
    NoiseProfile p;
    p.mode   = NoiseProfile::Mode::Family;
    p.family = f;
    p.eps2   = eps2;
    return p;
}

} // namespace

TEST_CASE("site quadratic form M and linear term N reproduce the brute-force error") {
    std::mt19937_64 rng(1);
    const int       n  = 3;
    const Mpo       u  = Mpo::from_dense(superop_from_kraus(oracle::random_channel(n, 2, rng)));
    const Mat       du = mpo_to_dense(u).matrix;
    const Mpo       x0 = random_mpo(n, 2, rng);
    for(int j = 0; j < n; ++j) {
        InverseWorkspace ws(u, x0);
        CHECK(ws.error() == doctest::Approx(brute_error(x0, du)).epsilon(1e-10));
        const Mat m  = ws.environment_M(j);
        const Vec nv = ws.environment_N(j);
        CHECK((m - m.adjoint()).norm() <= 1e-10 * m.norm());
        for(int trial = 0; trial < 3; ++trial) {
            Mpo          x = x0;
            x.site(j)      = random_tensor(x0.site(j).dims(), rng);
            const Vec    v = Eigen::Map<const Vec>(x.site(j).data(), x.site(j).size());
            const double e = std::real(v.dot(m * v)) - 2.0 * std::real(nv.dot(v)) + ws.normalization();
            CHECK(e == doctest::Approx(brute_error(x, du)).epsilon(1e-9));
        }
    }
}

TEST_CASE("a site update is the exact local minimizer") {
    std::mt19937_64  rng(2);
    const Mpo        u  = Mpo::from_dense(superop_from_kraus(oracle::random_channel(2, 2, rng)));
    const Mat        du = mpo_to_dense(u).matrix;
    InverseWorkspace ws(u, random_mpo(2, 2, rng));
    const double     before = ws.error();
    const double     after  = ws.update_site(0);
    CHECK(after <= before);
    CHECK(after == doctest::Approx(brute_error(ws.guess(), du)).epsilon(1e-9));
    for(int k = 0; k < 5; ++k) {
        Mpo x = ws.guess();
        Tensor d = random_tensor(x.site(0).dims(), rng);
        d *= 1e-3;
        x.site(0) += d;
        CHECK(brute_error(x, du) >= after - 1e-10);
    }
    // gauge shifts leave the operator untouched
    const Mat before_shift = mpo_to_dense(ws.guess()).matrix;
    ws.shift_right(0);
    CHECK((mpo_to_dense(ws.guess()).matrix - before_shift).norm() <= 1e-11 * before_shift.norm());
    ws.shift_left(1);
    CHECK((mpo_to_dense(ws.guess()).matrix - before_shift).norm() <= 1e-11 * before_shift.norm());
}

TEST_CASE("identity has the identity as its inverse") {
    auto [x, rep] = mpo_inverse(Mpo::identity(4), 1);
    CHECK(rep.final_error <= 1e-20);
    CHECK((mpo_to_dense(x).matrix - Mat::Identity(256, 256)).norm() <= 1e-10);
    CHECK(rep.error_history.front() <= 1e-20);
}

TEST_CASE("noiseless circuits are inverted by their dagger") {
    const auto spec = generate_test_circuit(4, 4, 3, NoiseProfile{});
    const Mpo  u    = compile_ideal_mpo(spec);
    auto [x, rep]   = mpo_inverse(u, u.max_bond());
    CHECK(rep.error_history.back() <= 1e-24);
    const Mat du = mpo_to_dense(u).matrix;
    CHECK((mpo_to_dense(x).matrix - du.adjoint()).norm() <= 1e-9);
    CHECK(rep.trace_infidelity_history.back() <= 1e-20);
}

TEST_CASE("noisy inverse: reported error matches the dense residual and site errors never increase") {
    for(auto f : {NoiseFamily::Depolarizing, NoiseFamily::AmplitudeDamping}) {
        const auto spec = generate_test_circuit(4, 4, 7, family(f, 0.05));
        const Mpo  u    = compile_noisy_mpo(spec).first;
        auto [x, rep]   = mpo_inverse(u, 3, 20, 1e-15);
        CHECK(rep.normalization == 256.0);
        CHECK(rep.final_error == doctest::Approx(brute_error(x, mpo_to_dense(u).matrix)).epsilon(1e-6));
        CHECK(rep.error_history.size() == static_cast<size_t>(rep.sweeps_used + 1));
        CHECK(rep.trace_infidelity_history.size() == rep.error_history.size());
        double prev = rep.error_history.front();
        for(double e : rep.site_errors) {
            CHECK(e <= prev + 1e-12);
            prev = e;
        }
        for(size_t k = 1; k < rep.error_history.size(); ++k) CHECK(rep.error_history[k] <= rep.error_history[k - 1] + 1e-12);
        CHECK(rep.error_history.back() < rep.error_history.front());
        CHECK(x.max_bond() <= 3);
    }
}

TEST_CASE("the inverse undoes single-qubit depolarizing noise exactly at bond 1") {
    std::vector<Mat> local;
    for(double p : {0.01, 0.1, 0.3}) local.push_back(make_noise_superop(NoiseKind::Depolarizing1q, p).matrix);
    const Mpo u   = Mpo::product(local);
    auto [x, rep] = mpo_inverse(u, 1);
    CHECK(rep.final_error <= 1e-20);
    const Mat du = mpo_to_dense(u).matrix;
    CHECK((mpo_to_dense(x).matrix - du.inverse()).norm() <= 1e-9);
}

TEST_CASE("initial guess and option validation") {
    std::mt19937_64 rng(5);
    const Mpo       u = random_mpo(4, 4, rng);
    const Mpo       g = initial_inverse_guess(u, 3);
    g.validate();
    CHECK(g.max_bond() <= 3);
    CHECK_THROWS_AS(mpo_inverse(u, 0), std::invalid_argument);
    InverseOptions opt;
    opt.bond_dim    = 2;
    opt.random_init = true;
    opt.seed        = 9;
    opt.max_sweeps  = 3;
    auto [x, rep]   = mpo_inverse(u, opt);
    CHECK(rep.sweeps_used <= 3);
    CHECK(rep.error_history.back() <= rep.error_history.front());
}

TEST_CASE("solve_site returns the minimum-norm solution") {
    std::mt19937_64 rng(6);
    const Mat       a = oracle::random_matrix(6, 2, rng);
    const Mat       m = a * a.adjoint();
    const Vec       b = m * oracle::random_matrix(6, 1, rng).col(0);
    const Vec       x = solve_site(m, b);
    CHECK((m * x - b).norm() <= 1e-10 * b.norm());
    CHECK((x - m.completeOrthogonalDecomposition().pseudoInverse() * b).norm() <= 1e-9 * x.norm());
}
