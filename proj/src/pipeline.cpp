#include "qem/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qem {

namespace {

Mat pauli_sum_local() {
    Mat p = Mat::Zero(4, 4);
    for(int a : {0, 3})
        for(int b : {0, 3}) p(a, b) = 2.0;
    return p;
}

bool is_product(const Mpo &m) { return m.max_bond() == 1; }

struct Evolver {
    Sites          sites;
    size_t         center = 0;
    StateSimConfig cfg;
    double         discarded = 0.0;
    Index          max_bond  = 1;

    void move_to(size_t q) {
        while(center < q) chain::move_center_right(sites, center++);
        while(center > q) chain::move_center_left(sites, center--);
    }

    void one(const Mat &g4, size_t q) {
        move_to(q);
        VecStateMps tmp(std::move(sites));
        apply_one_site(tmp, g4, static_cast<int>(q));
        sites = std::move(tmp.sites());
    }

    void two(const Mat &g16, size_t q) {
        move_to(q);
        VecStateMps tmp(std::move(sites));
        discarded += apply_two_site(tmp, g16, static_cast<int>(q), cfg.chi, cfg.cutoff);
        sites  = std::move(tmp.sites());
        center = q + 1;
        max_bond = std::max(max_bond, sites[q].dim(2));
    }

    void mpo(const Mpo &m) {
        if(is_product(m)) {
            for(int j = 0; j < m.size(); ++j) one(Mat(m.site(j).matrix(2)), static_cast<size_t>(j));
            return;
        }
        auto [out, rep] = apply_mpo_layer(VecStateMps(std::move(sites)), m, cfg.chi, cfg.cutoff);
        sites           = std::move(out.sites());
        center          = 0;
        discarded += rep.total();
        for(const auto &s : sites) max_bond = std::max(max_bond, s.dim(2));
    }
};

} // namespace

NoiseInverse noise_inverse(const Mpo &part_ideal, const Mpo &part_noisy_inverse, Index d_prime, double cutoff) {
    if(d_prime < 1) throw std::invalid_argument("noise_inverse: d_prime must be >= 1");
    NoiseInverse ni;
    auto [e, rep]  = apply_mpo_layer(part_noisy_inverse, part_ideal, d_prime, cutoff);
    ni.mpo         = std::move(e);
    ni.truncation  = std::move(rep);
    ni.d_inv       = part_noisy_inverse.max_bond();
    return ni;
}

Mpo correction_layer(const NoiseInverse &ni, std::optional<double> correction_eps1, std::mt19937_64 &rng) {
    if(!correction_eps1) return ni.mpo;
    if(!is_product(ni.mpo)) throw std::invalid_argument("correction_layer: noisy corrections require a bond-1 noise inverse");
    std::vector<Mat> local;
    for(int j = 0; j < ni.mpo.size(); ++j) {
        const double rate = sample_rate(*correction_eps1, rng);
        Mat          c(4, 4);
        for(Index t = 0; t < 4; ++t)
            for(Index s = 0; s < 4; ++s) c(t, s) = ni.mpo.site(j)(0, t, s, 0);
        local.push_back(make_noise_superop(NoiseKind::Depolarizing1q, rate).matrix * c);
    }
    return Mpo::product(local);
}

std::vector<SimStep> circuit_steps(const CircuitSpec &spec) {
    std::vector<SimStep> steps;
    for(const auto &l : spec.layers) steps.push_back({l, std::nullopt});
    return steps;
}

SimResult simulate_state(int n_qubits, const std::vector<SimStep> &steps, bool with_noise, const StateSimConfig &sim) {
    if(sim.chi < 1) throw std::invalid_argument("simulate_state: chi must be >= 1");
    Evolver ev;
    ev.sites = VecStateMps::zero_product(n_qubits).sites();
    ev.cfg   = sim;
    for(const auto &step : steps) {
        if(step.layer) {
            auto gates = step.layer->gates;
            std::sort(gates.begin(), gates.end(), [](const GateOp &a, const GateOp &b) { return a.qubit < b.qubit; });
            for(const auto &g : gates) {
                const Mat blk = gate_block(g, with_noise);
                if(gate_arity(g.gate) == 1) ev.one(blk, static_cast<size_t>(g.qubit));
                else ev.two(blk, static_cast<size_t>(g.qubit));
            }
            if(with_noise && step.layer->global_rate) ev.mpo(global_depolarizing_mpo(n_qubits, *step.layer->global_rate));
        }
        if(step.op) {
            if(step.op->size() != n_qubits) throw std::invalid_argument("simulate_state: operator size mismatch");
            ev.mpo(*step.op);
        }
    }
    return {VecStateMps(std::move(ev.sites)), ev.discarded, ev.max_bond};
}

DenseState simulate_dense(int n_qubits, const std::vector<SimStep> &steps, bool with_noise) {
    DenseState rho = DenseState::zero_product(n_qubits);
    const Mat  p   = pauli_sum_local();
    for(const auto &step : steps) {
        if(step.layer) {
            for(const auto &g : step.layer->gates) apply_local(rho, gate_block(g, with_noise), g.qubit);
            if(with_noise && step.layer->global_rate) {
                const double d4 = std::pow(4.0, n_qubits);
                const double a  = 1.0 - d4 / (d4 - 1.0) * *step.layer->global_rate;
                const double b  = *step.layer->global_rate / (d4 - 1.0);
                DenseState   pr = rho;
                for(int q = 0; q < n_qubits; ++q) apply_local(pr, p, q);
                rho.vec = a * rho.vec + b * pr.vec;
            }
        }
        if(step.op) {
            if(is_product(*step.op)) {
                for(int j = 0; j < n_qubits; ++j) {
                    Mat c(4, 4);
                    for(Index t = 0; t < 4; ++t)
                        for(Index s = 0; s < 4; ++s) c(t, s) = step.op->site(j)(0, t, s, 0);
                    apply_local(rho, c, j);
                }
            } else {
                rho = apply(mpo_to_dense(*step.op), rho);
            }
        }
    }
    return rho;
}

QemRunRecord run_pipeline(const CircuitSpec &spec, const PipelineParams &params) {
    const auto   t0    = std::chrono::steady_clock::now();
    const auto   parts = partition(spec);
    std::mt19937_64 rng(derive_seed(params.seed, 1));

    QemRunRecord rec;
    rec.seed   = spec.seed;
    rec.config = {{"n_qubits", spec.n_qubits},
                  {"depth", spec.depth()},
                  {"parts", static_cast<int>(parts.size())},
                  {"d_compile", params.d_compile},
                  {"d_inv", params.d_inv},
                  {"d_prime", params.d_prime},
                  {"chi", params.sim.chi},
                  {"correction_eps1", params.correction_eps1 ? nlohmann::json(*params.correction_eps1) : nlohmann::json(nullptr)},
                  {"placement", to_string(spec.placement)}};

    InverseOptions opt;
    opt.bond_dim   = params.d_inv;
    opt.max_sweeps = params.max_sweeps;
    opt.tol        = params.tol;

    std::vector<SimStep> noisy_steps, mitigated_steps;
    for(size_t k = 0; k < parts.size(); ++k) {
        const auto &part = parts[k];
        auto [u, trunc]  = compile_noisy_mpo(part, params.d_compile);
        const Mpo u0     = compile_ideal_mpo(part);
        auto [x, irep]   = mpo_inverse(u, opt);
        NoiseInverse ni  = noise_inverse(u0, x, params.d_prime);
        ni.part_index    = static_cast<int>(k);
        ni.inverse_report = irep;
        const Mpo corr   = correction_layer(ni, params.correction_eps1, rng);

        PartDiagnostics d;
        d.sweeps    = irep.sweeps_used;
        d.converged = irep.converged;
        d.inverse_trace_infidelity = irep.trace_infidelity_history.back();
        if(params.channel_metrics) {
            d.unmitigated      = relative_distance_mpo(u, u0);
            d.inverse_residual = relative_distance_mpo(multiply(x, u), Mpo::identity(spec.n_qubits));
            d.mitigated        = relative_distance_mpo(multiply(ni.mpo, u), u0);
        }
        rec.parts.push_back(d);

        for(const auto &l : part.layers) {
            noisy_steps.push_back({l, std::nullopt});
            mitigated_steps.push_back({l, std::nullopt});
        }
        mitigated_steps.push_back({std::nullopt, corr});
    }

    const auto ideal = simulate_state(spec.n_qubits, circuit_steps(spec), false, params.sim);
    const auto noisy = simulate_state(spec.n_qubits, noisy_steps, true, params.sim);
    const auto mit   = simulate_state(spec.n_qubits, mitigated_steps, true, params.sim);

    rec.unmitigated       = state_distance(noisy.state, ideal.state);
    rec.mitigated         = state_distance(mit.state, ideal.state);
    rec.trace_unmitigated = std::real(state_trace(noisy.state));
    rec.trace_mitigated   = std::real(state_trace(mit.state));
    rec.sim_discarded     = ideal.discarded + noisy.discarded + mit.discarded;
    rec.sim_max_bond      = std::max({ideal.max_bond, noisy.max_bond, mit.max_bond});
    rec.wall_seconds      = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

double each_gate_floor(const CircuitSpec &spec, Index max_bond, double cutoff) {
    const Mpo u_global = compile_noisy_mpo(strip_local_noise(spec), max_bond, cutoff).first;
    const Mpo u0       = compile_ideal_mpo(spec, 0, cutoff);
    return relative_distance_mpo(u_global, u0);
}

std::string QemRunRecord::csv_header() {
    return "seed,n_qubits,depth,parts,d_compile,d_inv,d_prime,chi,unmitigated,mitigated,ratio,trace_unmitigated,"
           "trace_mitigated,sim_discarded,sim_max_bond,channel_unmitigated_mean,channel_mitigated_mean,max_sweeps,"
           "all_converged";
}

std::string QemRunRecord::csv_row() const {
    double cu = 0.0, cm = 0.0;
    int    sweeps = 0;
    bool   conv   = true;
    for(const auto &p : parts) {
        cu += p.unmitigated / static_cast<double>(parts.size());
        cm += p.mitigated / static_cast<double>(parts.size());
        sweeps = std::max(sweeps, p.sweeps);
        conv   = conv && p.converged;
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%llu,%d,%d,%d,%lld,%lld,%lld,%lld,%.10e,%.10e,%.10e,%.10e,%.10e,%.6e,%lld,%.10e,%.10e,%d,%d",
                  static_cast<unsigned long long>(seed), config.value("n_qubits", 0), config.value("depth", 0),
                  config.value("parts", 0), config.value("d_compile", 0LL), config.value("d_inv", 0LL),
                  config.value("d_prime", 0LL), config.value("chi", 0LL), unmitigated, mitigated,
                  unmitigated > 0 ? mitigated / unmitigated : 0.0, trace_unmitigated, trace_mitigated, sim_discarded,
                  static_cast<long long>(sim_max_bond), cu, cm, sweeps, conv ? 1 : 0);
    return buf;
}

nlohmann::json QemRunRecord::to_json() const {
    nlohmann::json jp = nlohmann::json::array();
    for(const auto &p : parts)
        jp.push_back({{"unmitigated", p.unmitigated},
                      {"inverse_residual", p.inverse_residual},
                      {"mitigated", p.mitigated},
                      {"sweeps", p.sweeps},
                      {"converged", p.converged},
                      {"inverse_trace_infidelity", p.inverse_trace_infidelity}});
    return {{"config", config},
            {"seed", seed},
            {"unmitigated", unmitigated},
            {"mitigated", mitigated},
            {"trace_unmitigated", trace_unmitigated},
            {"trace_mitigated", trace_mitigated},
            {"sim_discarded", sim_discarded},
            {"sim_max_bond", sim_max_bond},
            {"parts", std::move(jp)},
            {"wall_seconds", wall_seconds}};
}

} // namespace qem
