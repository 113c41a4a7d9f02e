#pragma once

// Mitigation pipeline: per-part noisy MPO, variational inverse, noise inverse E^-1 = U0 * U^-1 truncated
// to D', optional noisy single-qubit realization of the corrections, and state-level evaluation.

#include "qem/circuit.hpp"
#include "qem/inverse.hpp"

#include "json.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qem {

struct NoiseInverse {
    int              part_index = 0;
    Mpo              mpo;
    Index            d_inv = 0;
    InverseReport    inverse_report;
    TruncationReport truncation;
};

/// E^-1 = part_ideal * part_noisy_inverse, compressed to bond d_prime.
NoiseInverse noise_inverse(const Mpo &part_ideal, const Mpo &part_noisy_inverse, Index d_prime,
                           double cutoff = kDefaultCutoff);

/// Correction applied after a part. Without `correction_noise` the inverse MPO is returned unchanged;
/// otherwise (bond 1 required) every site map is followed by single-qubit depolarizing noise at a rate
/// drawn from [0.8 eps1, 1.2 eps1].
Mpo correction_layer(const NoiseInverse &ni, std::optional<double> correction_eps1, std::mt19937_64 &rng);

struct StateSimConfig {
    Index  chi     = 256; // state bond cap
    double cutoff  = kDefaultCutoff;
};

/// One step of a composite circuit: either a circuit layer or an operator applied as an MPO layer.
struct SimStep {
    std::optional<LayerSpec> layer;
    std::optional<Mpo>       op;
};

struct SimResult {
    VecStateMps state;
    double      discarded = 0.0; // summed discarded weight
    Index       max_bond  = 1;
};

/// MPS evolution of |rho>> from the |0...0> product state.
SimResult simulate_state(int n_qubits, const std::vector<SimStep> &steps, bool with_noise, const StateSimConfig &sim);

/// Dense oracle of the same evolution (n <= 10).
DenseState simulate_dense(int n_qubits, const std::vector<SimStep> &steps, bool with_noise);

/// Circuit layers as simulation steps.
std::vector<SimStep> circuit_steps(const CircuitSpec &spec);

struct PipelineParams {
    Index                 d_compile  = 5;  // D of the per-part noisy MPO
    Index                 d_inv      = 5;
    Index                 d_prime    = 1;
    int                   max_sweeps = 20;
    double                tol        = 1e-15;
    std::optional<double> correction_eps1 = 1e-3;
    std::uint64_t         seed        = 0; // correction-noise stream
    StateSimConfig        sim;
    bool                  channel_metrics = true;
};

struct PartDiagnostics {
    double unmitigated      = 0.0; // D(U_k, U0_k)
    double inverse_residual = 0.0; // D(U^-1_k U_k, 1)
    double mitigated        = 0.0; // D(E^-1_k U_k, U0_k)
    int    sweeps           = 0;
    bool   converged        = false;
    double inverse_trace_infidelity = 0.0;
};

struct QemRunRecord {
    nlohmann::json               config;
    std::uint64_t                seed        = 0;
    double                       unmitigated = 0.0; // D(rho, rho0)
    double                       mitigated   = 0.0; // D(rho_mit, rho0)
    double                       trace_unmitigated = 0.0;
    double                       trace_mitigated   = 0.0;
    double                       sim_discarded     = 0.0;
    Index                        sim_max_bond      = 1;
    std::vector<PartDiagnostics> parts;
    double                       wall_seconds = 0.0;

    static std::string csv_header();
    [[nodiscard]] std::string    csv_row() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

QemRunRecord run_pipeline(const CircuitSpec &spec, const PipelineParams &params);

/// "Each-gate QEM" floor: D(U with per-gate noise removed, U0); only global noise remains.
double each_gate_floor(const CircuitSpec &spec, Index max_bond = 0, double cutoff = kDefaultCutoff);

} // namespace qem
