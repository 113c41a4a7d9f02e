#include "doctest.h"
#include "oracle.hpp"

#include "qem/circuit.hpp"

#include <set>

using namespace qem;

namespace {

NoiseProfile mixed(double eps2, double global = 0.0, int period = 1) {
    NoiseProfile p;
    p.mode          = NoiseProfile::Mode::Mixed;
    p.eps2          = eps2;
    p.global_rate   = global;
    p.global_period = period;
    return p;
}

// Operator-level simulation of the whole circuit on a basis operator.
Mat run_circuit(const CircuitSpec &spec, const Mat &rho0, bool with_noise) {
    const int n   = spec.n_qubits;
    Mat       rho = rho0;
    for(const auto &layer : spec.layers) {
        for(const auto &g : layer.gates) {
            const int arity = gate_arity(g.gate);
            const Mat u     = arity == 1 ? oracle::embed(gate_unitary(g.gate), g.qubit, 1, n) : oracle::cnot(g.qubit, g.qubit + 1, n);
            rho             = u * rho * u.adjoint();
            if(with_noise && g.noise) {
                std::vector<Mat> ks;
                for(const auto &k : noise_kraus(g.noise->kind, g.noise->rate)) ks.push_back(oracle::embed(k, g.qubit, arity, n));
                rho = oracle::apply_kraus(ks, rho);
            }
        }
        if(with_noise && layer.global_rate) {
            const double d4 = std::pow(4.0, n), rp = *layer.global_rate * d4 / (d4 - 1);
            rho = (1 - rp) * rho + rp * rho.trace() * Mat::Identity(rho.rows(), rho.cols()) / double(rho.rows());
        }
    }
    return rho;
}

Mat oracle_superop(const CircuitSpec &spec, bool with_noise) {
    return oracle::superop_of([&](const Mat &e) { return run_circuit(spec, e, with_noise); }, spec.n_qubits);
}

} // namespace

TEST_CASE("test circuits alternate CNOT and single-qubit layers") {
    const auto spec = generate_test_circuit(6, 8, 3, mixed(0.01));
    CHECK(spec.depth() == 8);
    for(int l = 0; l < 8; ++l) {
        const auto &layer = spec.layers[static_cast<size_t>(l)];
        CHECK(layer.two_qubit == (l % 2 == 0));
        if(layer.two_qubit) {
            const int offset = (l / 2) % 2;
            CHECK(layer.gates.size() == static_cast<size_t>(offset ? 2 : 3));
            for(size_t k = 0; k < layer.gates.size(); ++k) {
                CHECK(layer.gates[k].gate == GateKind::CNOT);
                CHECK(layer.gates[k].qubit == offset + 2 * static_cast<int>(k));
                CHECK(noise_arity(layer.gates[k].noise->kind) == 2);
                CHECK(layer.gates[k].noise->rate >= 0.008 - 1e-15);
                CHECK(layer.gates[k].noise->rate <= 0.012 + 1e-15);
            }
        } else {
            CHECK(layer.gates.size() == 6);
            for(const auto &g : layer.gates) {
                CHECK(g.gate != GateKind::CNOT);
                CHECK(noise_arity(g.noise->kind) == 1);
                CHECK(g.noise->rate >= 0.0008 - 1e-16);
                CHECK(g.noise->rate <= 0.0012 + 1e-16);
            }
        }
    }
    const auto aligned = generate_test_circuit(6, 8, 3, mixed(0.01), Placement::Aligned);
    for(const auto &layer : aligned.layers)
        if(layer.two_qubit) CHECK(layer.gates.front().qubit == 0);
}

TEST_CASE("mixed noise draws several families; a family profile draws one") {
    std::set<NoiseKind> kinds;
    for(const auto &layer : generate_test_circuit(10, 12, 1, mixed(0.01)).layers)
        for(const auto &g : layer.gates) kinds.insert(g.noise->kind);
    CHECK(kinds.size() >= 6);

    NoiseProfile p;
    p.mode   = NoiseProfile::Mode::Family;
    p.family = NoiseFamily::Dephasing;
    p.eps2   = 0.05;
    for(const auto &layer : generate_test_circuit(4, 4, 1, p).layers)
        for(const auto &g : layer.gates)
            CHECK((g.noise->kind == NoiseKind::Dephasing1q || g.noise->kind == NoiseKind::Dephasing2q));
}

TEST_CASE("generation is deterministic in the seed") {
    const auto a = generate_test_circuit(4, 6, 11, mixed(0.02));
    const auto b = generate_test_circuit(4, 6, 11, mixed(0.02));
    const auto c = generate_test_circuit(4, 6, 12, mixed(0.02));
    CHECK(to_json(a) == to_json(b));
    CHECK(to_json(a) != to_json(c));
}

TEST_CASE("global noise follows the requested period") {
    const auto spec = generate_test_circuit(4, 8, 1, mixed(0.01, 0.05, 4));
    for(int l = 0; l < 8; ++l) CHECK(spec.layers[static_cast<size_t>(l)].global_rate.has_value() == ((l + 1) % 4 == 0));
}

TEST_CASE("dense compilation matches operator-level simulation") {
    for(std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto spec = generate_test_circuit(4, 4, seed, mixed(0.05, 0.02, 2));
        CHECK((compile_dense(spec, true).matrix - oracle_superop(spec, true)).norm() <= 1e-12);
        CHECK((compile_dense(spec, false).matrix - oracle_superop(spec, false)).norm() <= 1e-12);
    }
}

TEST_CASE("MPO compilation matches the dense oracle") {
    for(std::uint64_t seed = 1; seed <= 6; ++seed) {
        const int  n    = seed % 2 ? 2 : 4;
        const auto spec = generate_test_circuit(n, 6, seed, mixed(0.03, 0.01, 3));
        const Mat  ref  = compile_dense(spec, true).matrix;
        auto [u, rep]   = compile_noisy_mpo(spec);
        CHECK(std::sqrt(oracle::rel_dist(mpo_to_dense(u).matrix, ref)) <= 1e-10);
        CHECK(rep.total() <= 1e-20);
        const Mat ideal = compile_dense(spec, false).matrix;
        CHECK((mpo_to_dense(compile_ideal_mpo(spec)).matrix - ideal).norm() <= 1e-10 * ideal.norm());
    }
}

TEST_CASE("bond caps on compilation are respected") {
    const auto spec = generate_test_circuit(6, 6, 2, mixed(0.05));
    auto [u, rep]   = compile_noisy_mpo(spec, 3);
    CHECK(u.max_bond() <= 3);
    CHECK(rep.total() > 0.0);
}

TEST_CASE("two-site split reproduces the gate") {
    const Mat g        = gate_block({GateKind::CNOT, 0, NoiseSpec{NoiseKind::AmplitudeDamping2q, 0.1}}, true);
    auto [left, right] = split_two_site(g);
    CHECK(left.dim(3) == right.dim(0));
    const Mpo two(Sites{left, right});
    CHECK((mpo_to_dense(two).matrix - g).norm() <= 1e-13);
    // CNOT has operator-Schmidt rank 2 as a unitary, hence 4 as a superoperator
    auto [l2, r2] = split_two_site(make_gate_superop(GateKind::CNOT).matrix);
    CHECK(l2.dim(3) == 4);
}

TEST_CASE("partitioning splits the layers in order") {
    auto spec = generate_test_circuit(4, 8, 5, mixed(0.01));
    CHECK_THROWS_AS(set_partition(spec, 3, 3), std::invalid_argument);
    set_partition(spec, 2, 4);
    const auto parts = partition(spec);
    REQUIRE(parts.size() == 2);
    const Mat whole = compile_dense(spec, true).matrix;
    const Mat comp  = compile_dense(parts[1], true).matrix * compile_dense(parts[0], true).matrix;
    CHECK((whole - comp).norm() <= 1e-12);
}

TEST_CASE("noise stripping") {
    const auto spec = generate_test_circuit(4, 4, 5, mixed(0.05, 0.05));
    const auto none = strip_all_noise(spec);
    CHECK((compile_dense(none, true).matrix - compile_dense(spec, false).matrix).norm() <= 1e-13);
    const auto local = strip_local_noise(spec);
    for(const auto &l : local.layers) {
        CHECK(l.global_rate.has_value());
        for(const auto &g : l.gates) CHECK_FALSE(g.noise.has_value());
    }
}

TEST_CASE("circuit JSON round-trips") {
    auto spec = generate_test_circuit(4, 8, 9, mixed(0.01, 0.02, 4), Placement::Aligned);
    set_partition(spec, 2, 4);
    const auto back = circuit_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    CHECK((compile_dense(back, true).matrix - compile_dense(spec, true).matrix).norm() == 0.0);
    const auto p = mixed(0.03, 0.01, 2);
    CHECK(to_json(noise_profile_from_json(to_json(p))) == to_json(p));
    CHECK_THROWS(generate_test_circuit(3, 4, 1, p));
}
