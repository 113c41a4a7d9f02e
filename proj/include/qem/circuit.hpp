#pragma once

// Layered circuit specifications, the random test-circuit family and compilation to MPOs or dense
// superoperators.

#include "qem/channels.hpp"
#include "qem/mpo.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qem {

enum class Placement { Staggered, Aligned };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Depolarizing1q;
    double    rate = 0.0;
};

struct GateOp {
    GateKind                 gate  = GateKind::Z;
    int                      qubit = 0; // first (lowest) qubit; CNOT control sits here
    std::optional<NoiseSpec> noise;     // applied right after the gate
};

struct LayerSpec {
    bool                  two_qubit = false;
    std::vector<GateOp>   gates;
    std::optional<double> global_rate; // global depolarizing noise after the layer
};

struct CircuitSpec {
    int                    n_qubits = 0;
    std::vector<LayerSpec> layers;
    std::uint64_t          seed            = 0;
    int                    parts           = 1;
    int                    layers_per_part = 0; // 0 means the whole circuit is one part
    Placement              placement       = Placement::Staggered;

    [[nodiscard]] int depth() const { return static_cast<int>(layers.size()); }
};

struct NoiseProfile {
    enum class Mode { None, Family, Mixed };
    Mode        mode   = Mode::None;
    NoiseFamily family = NoiseFamily::Depolarizing;
    double      eps2   = 0.0;
    double      eps1   = -1.0;  // negative: eps2 / 10
    double      global_rate = 0.0;
    int         global_period = 1; // global noise after every `global_period` layers

    [[nodiscard]] double one_qubit_rate() const { return eps1 < 0.0 ? eps2 / 10.0 : eps1; }
};

/// Odd layers (1-based) hold CNOTs on neighbouring pairs, even layers one random gate from
/// {Z, H, S, T} per qubit. Staggered placement shifts the CNOT pairs by one on every second CNOT layer.
CircuitSpec generate_test_circuit(int n_qubits, int depth, std::uint64_t seed, const NoiseProfile &noise,
                                  Placement placement = Placement::Staggered);

/// Sets the part structure; throws when parts * layers_per_part != depth.
void set_partition(CircuitSpec &spec, int parts, int layers_per_part);
std::vector<CircuitSpec> partition(const CircuitSpec &spec);

/// Copies without per-gate noise / without any noise.
CircuitSpec strip_local_noise(const CircuitSpec &spec);
CircuitSpec strip_all_noise(const CircuitSpec &spec);

/// Superoperator of one gate including its attached noise (noise after gate when `with_noise`).
Mat gate_block(const GateOp &op, bool with_noise);

/// Operator-Schmidt split of a two-site superoperator into a two-site MPO fragment.
std::pair<Tensor, Tensor> split_two_site(const Mat &g16, double cutoff = kDefaultCutoff);

/// Product-form MPO of the gates of one layer (global noise excluded).
Mpo layer_mpo(const LayerSpec &layer, int n_qubits, bool with_noise);

Mpo compile_ideal_mpo(const CircuitSpec &spec, Index max_bond = 0, double cutoff = kDefaultCutoff);
std::pair<Mpo, TruncationReport> compile_noisy_mpo(const CircuitSpec &spec, Index max_bond = 0,
                                                   double cutoff = kDefaultCutoff);

/// Dense oracle: gate-by-gate left multiplication with the closed-form global channel.
DenseSuperOp compile_dense(const CircuitSpec &spec, bool with_noise);

nlohmann::json to_json(const CircuitSpec &spec);
CircuitSpec    circuit_from_json(const nlohmann::json &j);
nlohmann::json to_json(const NoiseProfile &p);
NoiseProfile   noise_profile_from_json(const nlohmann::json &j);

std::string to_string(Placement p);
Placement   parse_placement(const std::string &s);

} // namespace qem
