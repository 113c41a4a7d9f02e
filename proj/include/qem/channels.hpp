#pragma once

// Gate and noise superoperators.

#include "qem/dense.hpp"
#include "qem/mpo.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qem {

enum class GateKind { Z, H, S, T, CNOT };

enum class NoiseKind {
    Depolarizing1q,
    Depolarizing2q,
    Dephasing1q,
    Dephasing2q,
    BitFlip1q,
    BitFlip2q,
    AmplitudeDamping1q,
    AmplitudeDamping2q,
    GlobalDepolarizing,
};

/// The four per-gate noise families; each maps to a 1q and a 2q NoiseKind.
enum class NoiseFamily { Depolarizing, Dephasing, BitFlip, AmplitudeDamping };

Mat gate_unitary(GateKind kind);
int gate_arity(GateKind kind);

/// U (x) U*, dense.
DenseSuperOp make_gate_superop(GateKind kind);

/// Number of qubits the channel acts on; `width` is only used by GlobalDepolarizing.
int noise_arity(NoiseKind kind, int width = 0);
/// Largest admissible rate (the identity coefficient of the operator-sum form stays nonnegative).
double max_rate(NoiseKind kind, int width = 0);
NoiseKind family_kind(NoiseFamily family, int arity);

/// Operator-sum form; not available for GlobalDepolarizing beyond small widths (4^n terms).
std::vector<Mat> noise_kraus(NoiseKind kind, double rate, int width = 0);

/// Dense superoperator; throws std::invalid_argument for a rate outside [0, max_rate].
DenseSuperOp make_noise_superop(NoiseKind kind, double rate, int width = 0);

/// Bond-2 MPO of the n-qubit global depolarizing channel.
Mpo global_depolarizing_mpo(int n, double rate);

/// Uniform draw from [0.8 mean, 1.2 mean].
double sample_rate(double mean, std::mt19937_64 &rng);

/// splitmix64 mixing of a base seed with a stream id; gives independent per-task RNG streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

std::string to_string(GateKind kind);
std::string to_string(NoiseKind kind);
std::string to_string(NoiseFamily family);
GateKind    parse_gate(const std::string &s);
NoiseKind   parse_noise(const std::string &s);
NoiseFamily parse_family(const std::string &s);

} // namespace qem
