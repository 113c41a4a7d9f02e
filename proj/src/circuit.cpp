#include "qem/circuit.hpp"

#include "qem/linalg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qem {

namespace {

constexpr GateKind kSingleGates[] = {GateKind::Z, GateKind::H, GateKind::S, GateKind::T};
constexpr NoiseFamily kFamilies[] = {NoiseFamily::Depolarizing, NoiseFamily::Dephasing, NoiseFamily::BitFlip,
                                     NoiseFamily::AmplitudeDamping};

std::optional<NoiseSpec> draw_noise(const NoiseProfile &p, int arity, std::mt19937_64 &rng) {
    if(p.mode == NoiseProfile::Mode::None) return std::nullopt;
    NoiseFamily family = p.family;
    if(p.mode == NoiseProfile::Mode::Mixed) family = kFamilies[std::uniform_int_distribution<int>(0, 3)(rng)];
    const double mean = arity == 2 ? p.eps2 : p.one_qubit_rate();
    const double rate = sample_rate(mean, rng);
    if(rate == 0.0) return std::nullopt;
    return NoiseSpec{family_kind(family, arity), rate};
}

Mpo global_layer(int n, double rate) { return global_depolarizing_mpo(n, rate); }

void accumulate(TruncationReport &total, const TruncationReport &r) {
    if(total.discarded.size() < r.discarded.size()) total.discarded.resize(r.discarded.size(), 0.0);
    for(size_t i = 0; i < r.discarded.size(); ++i) total.discarded[i] += r.discarded[i];
}

} // namespace

CircuitSpec generate_test_circuit(int n_qubits, int depth, std::uint64_t seed, const NoiseProfile &noise,
                                  Placement placement) {
    if(n_qubits < 1) throw std::invalid_argument("generate_test_circuit: n_qubits must be >= 1");
    if(depth < 1) throw std::invalid_argument("generate_test_circuit: depth must be >= 1");
    if(n_qubits % 2 != 0) throw std::invalid_argument("generate_test_circuit: CNOT layers need an even qubit count");
    if(noise.global_period < 1) throw std::invalid_argument("generate_test_circuit: global_period must be >= 1");

    std::mt19937_64 rng(derive_seed(seed, 0));
    CircuitSpec     spec;
    spec.n_qubits  = n_qubits;
    spec.seed      = seed;
    spec.placement = placement;
    for(int l = 0; l < depth; ++l) {
        LayerSpec layer;
        layer.two_qubit = (l % 2 == 0);
        if(layer.two_qubit) {
            const int offset = placement == Placement::Staggered ? (l / 2) % 2 : 0;
            for(int q = offset; q + 1 < n_qubits; q += 2) layer.gates.push_back({GateKind::CNOT, q, draw_noise(noise, 2, rng)});
        } else {
            std::uniform_int_distribution<int> pick(0, 3);
            for(int q = 0; q < n_qubits; ++q) {
                const GateKind g = kSingleGates[pick(rng)];
                layer.gates.push_back({g, q, draw_noise(noise, 1, rng)});
            }
        }
        if(noise.global_rate > 0.0 && (l + 1) % noise.global_period == 0) layer.global_rate = noise.global_rate;
        spec.layers.push_back(std::move(layer));
    }
    return spec;
}

void set_partition(CircuitSpec &spec, int parts, int layers_per_part) {
    if(parts < 1 || layers_per_part < 1 || parts * layers_per_part != spec.depth())
        throw std::invalid_argument("set_partition: parts * layers_per_part must equal the circuit depth");
    spec.parts           = parts;
    spec.layers_per_part = layers_per_part;
}

std::vector<CircuitSpec> partition(const CircuitSpec &spec) {
    const int d0 = spec.layers_per_part == 0 ? spec.depth() : spec.layers_per_part;
    if(d0 < 1 || spec.depth() % d0 != 0 || spec.depth() / d0 != (spec.layers_per_part == 0 ? 1 : spec.parts))
        throw std::invalid_argument("partition: depth is not divisible into the requested parts");
    std::vector<CircuitSpec> out;
    for(int k = 0; k * d0 < spec.depth(); ++k) {
        CircuitSpec part     = spec;
        part.parts           = 1;
        part.layers_per_part = d0;
        part.layers.assign(spec.layers.begin() + k * d0, spec.layers.begin() + (k + 1) * d0);
        out.push_back(std::move(part));
    }
    return out;
}

CircuitSpec strip_local_noise(const CircuitSpec &spec) {
    CircuitSpec out = spec;
    for(auto &layer : out.layers)
        for(auto &g : layer.gates) g.noise.reset();
    return out;
}

CircuitSpec strip_all_noise(const CircuitSpec &spec) {
    CircuitSpec out = strip_local_noise(spec);
    for(auto &layer : out.layers) layer.global_rate.reset();
    return out;
}

Mat gate_block(const GateOp &op, bool with_noise) {
    Mat g = make_gate_superop(op.gate).matrix;
    if(with_noise && op.noise) {
        const auto &n = *op.noise;
        if(noise_arity(n.kind) != gate_arity(op.gate)) throw std::invalid_argument("gate_block: noise arity differs from gate arity");
        g = make_noise_superop(n.kind, n.rate).matrix * g;
    }
    return g;
}

std::pair<Tensor, Tensor> split_two_site(const Mat &g16, double cutoff) {
    // g[(t1 t2), (s1 s2)] -> m[(t1 s1), (t2 s2)]
    const Tensor g = permute(Tensor::from_matrix(g16, {4, 4, 4, 4}), {0, 2, 1, 3});
    auto         svd = truncated_svd(g.matrix(2), 0, cutoff);
    const Index  k   = svd.s.size();
    return {Tensor::from_matrix(svd.u, {1, 4, 4, k}),
            Tensor::from_matrix(svd.s.cast<cplx>().asDiagonal() * svd.vh, {k, 4, 4, 1})};
}

Mpo layer_mpo(const LayerSpec &layer, int n_qubits, bool with_noise) {
    Sites sites(static_cast<size_t>(n_qubits));
    for(const auto &op : layer.gates) {
        const int  a   = gate_arity(op.gate);
        const Mat  blk = gate_block(op, with_noise);
        if(op.qubit < 0 || op.qubit + a > n_qubits) throw std::invalid_argument("layer_mpo: gate outside the register");
        auto q = static_cast<size_t>(op.qubit);
        if(!sites[q].empty() || (a == 2 && !sites[q + 1].empty())) throw std::invalid_argument("layer_mpo: overlapping gates in one layer");
        if(a == 1) {
            sites[q] = Tensor::from_matrix(blk, {1, 4, 4, 1});
        } else {
            auto [l, r]  = split_two_site(blk);
            sites[q]     = std::move(l);
            sites[q + 1] = std::move(r);
        }
    }
    for(auto &s : sites)
        if(s.empty()) s = Tensor::from_matrix(Mat::Identity(4, 4), {1, 4, 4, 1});
    return Mpo(std::move(sites));
}

Mpo compile_ideal_mpo(const CircuitSpec &spec, Index max_bond, double cutoff) {
    Mpo acc = Mpo::identity(spec.n_qubits);
    for(const auto &layer : spec.layers) acc = apply_mpo_layer(acc, layer_mpo(layer, spec.n_qubits, false), max_bond, cutoff).first;
    return acc;
}

std::pair<Mpo, TruncationReport> compile_noisy_mpo(const CircuitSpec &spec, Index max_bond, double cutoff) {
    Mpo              acc = Mpo::identity(spec.n_qubits);
    TruncationReport total;
    total.discarded.assign(static_cast<size_t>(std::max(spec.n_qubits - 1, 0)), 0.0);
    for(const auto &layer : spec.layers) {
        auto step = apply_mpo_layer(acc, layer_mpo(layer, spec.n_qubits, true), max_bond, cutoff);
        acc       = std::move(step.first);
        accumulate(total, step.second);
        if(layer.global_rate) {
            auto g = apply_mpo_layer(acc, global_layer(spec.n_qubits, *layer.global_rate), max_bond, cutoff);
            acc    = std::move(g.first);
            accumulate(total, g.second);
        }
    }
    return {std::move(acc), std::move(total)};
}

DenseSuperOp compile_dense(const CircuitSpec &spec, bool with_noise) {
    const int    n  = spec.n_qubits;
    DenseSuperOp op = DenseSuperOp::identity(n);
    Mat          p  = Mat::Zero(4, 4); // sum_sigma sigma (x) sigma*
    for(int k = 0; k < 4; ++k) {
        Mat s = Mat::Zero(2, 2);
        if(k == 0) s << 1, 0, 0, 1;
        if(k == 1) s << 0, 1, 1, 0;
        if(k == 2) s << 0, cplx(0, -1), cplx(0, 1), 0;
        if(k == 3) s << 1, 0, 0, -1;
        p += superop_from_kraus({s}).matrix;
    }
    for(const auto &layer : spec.layers) {
        for(const auto &g : layer.gates) apply_local(op, gate_block(g, with_noise), g.qubit);
        if(with_noise && layer.global_rate) {
            const double d4 = std::pow(4.0, n);
            const double a  = 1.0 - d4 / (d4 - 1.0) * *layer.global_rate;
            const double b  = *layer.global_rate / (d4 - 1.0);
            DenseSuperOp pp = op;
            for(int q = 0; q < n; ++q) apply_local(pp, p, q);
            op.matrix = a * op.matrix + b * pp.matrix;
        }
    }
    return op;
}

std::string to_string(Placement p) { return p == Placement::Staggered ? "staggered" : "aligned"; }

Placement parse_placement(const std::string &s) {
    if(s == "staggered") return Placement::Staggered;
    if(s == "aligned") return Placement::Aligned;
    throw std::invalid_argument("unknown placement '" + s + "'");
}

nlohmann::json to_json(const CircuitSpec &spec) {
    nlohmann::json layers = nlohmann::json::array();
    for(const auto &l : spec.layers) {
        nlohmann::json gates = nlohmann::json::array();
        for(const auto &g : l.gates) {
            nlohmann::json jg = {{"gate", to_string(g.gate)}, {"qubit", g.qubit}};
            if(g.noise) jg["noise"] = {{"kind", to_string(g.noise->kind)}, {"rate", g.noise->rate}};
            gates.push_back(std::move(jg));
        }
        nlohmann::json jl = {{"two_qubit", l.two_qubit}, {"gates", std::move(gates)}};
        if(l.global_rate) jl["global_rate"] = *l.global_rate;
        layers.push_back(std::move(jl));
    }
    return {{"n_qubits", spec.n_qubits},        {"seed", spec.seed},
            {"parts", spec.parts},              {"layers_per_part", spec.layers_per_part},
            {"placement", to_string(spec.placement)}, {"layers", std::move(layers)}};
}

CircuitSpec circuit_from_json(const nlohmann::json &j) {
    CircuitSpec spec;
    spec.n_qubits        = j.at("n_qubits").get<int>();
    spec.seed            = j.value("seed", std::uint64_t{0});
    spec.parts           = j.value("parts", 1);
    spec.layers_per_part = j.value("layers_per_part", 0);
    spec.placement       = parse_placement(j.value("placement", std::string("staggered")));
    for(const auto &jl : j.at("layers")) {
        LayerSpec l;
        l.two_qubit = jl.value("two_qubit", false);
        for(const auto &jg : jl.at("gates")) {
            GateOp g{parse_gate(jg.at("gate").get<std::string>()), jg.at("qubit").get<int>(), std::nullopt};
            if(jg.contains("noise"))
                g.noise = NoiseSpec{parse_noise(jg["noise"].at("kind").get<std::string>()), jg["noise"].at("rate").get<double>()};
            l.gates.push_back(g);
        }
        if(jl.contains("global_rate")) l.global_rate = jl["global_rate"].get<double>();
        spec.layers.push_back(std::move(l));
    }
    return spec;
}

nlohmann::json to_json(const NoiseProfile &p) {
    const char *mode = p.mode == NoiseProfile::Mode::None ? "none" : p.mode == NoiseProfile::Mode::Family ? "family" : "mixed";
    return {{"mode", mode},         {"family", to_string(p.family)}, {"eps2", p.eps2},
            {"eps1", p.one_qubit_rate()}, {"global_rate", p.global_rate}, {"global_period", p.global_period}};
}

NoiseProfile noise_profile_from_json(const nlohmann::json &j) {
    NoiseProfile p;
    const auto   mode = j.value("mode", std::string("family"));
    if(mode == "none") p.mode = NoiseProfile::Mode::None;
    else if(mode == "family") p.mode = NoiseProfile::Mode::Family;
    else if(mode == "mixed") p.mode = NoiseProfile::Mode::Mixed;
    else throw std::invalid_argument("unknown noise mode '" + mode + "'");
    p.family        = parse_family(j.value("family", std::string("depolarizing")));
    p.eps2          = j.value("eps2", 0.0);
    p.eps1          = j.value("eps1", -1.0);
    p.global_rate   = j.value("global_rate", 0.0);
    p.global_period = j.value("global_period", 1);
    return p;
}

} // namespace qem
