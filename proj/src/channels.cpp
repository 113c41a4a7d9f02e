#include "qem/channels.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qem {

namespace {

const cplx kI{0.0, 1.0};

Mat pauli(int k) {
    Mat m(2, 2);
    switch(k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    default: m << 1, 0, 0, -1; break;
    }
    return m;
}

Mat kron(const Mat &a, const Mat &b) { return Eigen::kroneckerProduct(a, b).eval(); }

// Weighted Pauli-product channel: weights[i] for the Pauli string of index i.
std::vector<Mat> pauli_kraus(const std::vector<std::pair<std::vector<int>, double>> &terms) {
    std::vector<Mat> out;
    for(const auto &[string, w] : terms) {
        if(w == 0.0) continue;
        Mat e = Mat::Identity(1, 1);
        for(int k : string) e = kron(e, pauli(k));
        out.push_back(std::sqrt(w) * e);
    }
    if(out.empty()) {
        const auto n = terms.front().first.size();
        out.push_back(Mat::Identity(Index{1} << n, Index{1} << n));
    }
    return out;
}

std::vector<Mat> amplitude_damping_kraus(double rate) {
    Mat e0 = Mat::Zero(2, 2), e1 = Mat::Zero(2, 2);
    e0(0, 0) = 1.0;
    e0(1, 1) = std::sqrt(1.0 - rate);
    e1(0, 1) = std::sqrt(rate);
    return {e0, e1};
}

void check_rate(NoiseKind kind, double rate, int width) {
    const double hi = max_rate(kind, width);
    if(!(rate >= 0.0) || rate > hi + 1e-15)
        throw std::invalid_argument("noise rate " + std::to_string(rate) + " outside [0, " + std::to_string(hi) + "] for " +
                                    to_string(kind));
}

double pow4(int n) { return std::pow(4.0, n); }

// sum over Paulis of sigma (x) sigma* in the interleaved layout: 2 |1>><<1|.
Mat pauli_sum_superop() {
    Mat p = Mat::Zero(4, 4);
    for(int a : {0, 3})
        for(int b : {0, 3}) p(a, b) = 2.0;
    return p;
}

} // namespace

Mat gate_unitary(GateKind kind) {
    Mat u;
    switch(kind) {
    case GateKind::Z: u = pauli(3); break;
    case GateKind::H:
        u.resize(2, 2);
        u << 1, 1, 1, -1;
        u /= std::sqrt(2.0);
        break;
    case GateKind::S:
        u = Mat::Identity(2, 2);
        u(1, 1) = kI;
        break;
    case GateKind::T:
        u = Mat::Identity(2, 2);
        u(1, 1) = std::exp(kI * (std::numbers::pi / 4.0));
        break;
    case GateKind::CNOT:
        u = Mat::Zero(4, 4);
        u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
        break;
    }
    return u;
}

int gate_arity(GateKind kind) { return kind == GateKind::CNOT ? 2 : 1; }

DenseSuperOp make_gate_superop(GateKind kind) { return superop_from_unitary(gate_unitary(kind)); }

int noise_arity(NoiseKind kind, int width) {
    switch(kind) {
    case NoiseKind::Depolarizing1q:
    case NoiseKind::Dephasing1q:
    case NoiseKind::BitFlip1q:
    case NoiseKind::AmplitudeDamping1q: return 1;
    case NoiseKind::GlobalDepolarizing: return width;
    default: return 2;
    }
}

double max_rate(NoiseKind kind, int width) {
    switch(kind) {
    case NoiseKind::Depolarizing1q: return 3.0 / 4.0;
    case NoiseKind::Depolarizing2q: return 15.0 / 16.0;
    case NoiseKind::Dephasing1q: return 0.5;
    case NoiseKind::Dephasing2q: return 3.0 / 4.0;
    case NoiseKind::GlobalDepolarizing:
        if(width < 1) throw std::invalid_argument("global depolarizing noise needs width >= 1");
        return (pow4(width) - 1.0) / pow4(width);
    default: return 1.0;
    }
}

NoiseKind family_kind(NoiseFamily family, int arity) {
    const bool two = arity == 2;
    switch(family) {
    case NoiseFamily::Depolarizing: return two ? NoiseKind::Depolarizing2q : NoiseKind::Depolarizing1q;
    case NoiseFamily::Dephasing: return two ? NoiseKind::Dephasing2q : NoiseKind::Dephasing1q;
    case NoiseFamily::BitFlip: return two ? NoiseKind::BitFlip2q : NoiseKind::BitFlip1q;
    case NoiseFamily::AmplitudeDamping: return two ? NoiseKind::AmplitudeDamping2q : NoiseKind::AmplitudeDamping1q;
    }
    throw std::invalid_argument("family_kind: unknown family");
}

std::vector<Mat> noise_kraus(NoiseKind kind, double rate, int width) {
    check_rate(kind, rate, width);
    using Terms = std::vector<std::pair<std::vector<int>, double>>;
    switch(kind) {
    case NoiseKind::Depolarizing1q:
        return pauli_kraus({{{0}, 1.0 - rate}, {{1}, rate / 3}, {{2}, rate / 3}, {{3}, rate / 3}});
    case NoiseKind::Depolarizing2q: {
        Terms t;
        for(int a = 0; a < 4; ++a)
            for(int b = 0; b < 4; ++b) t.push_back({{a, b}, (a == 0 && b == 0) ? 1.0 - rate : rate / 15});
        return pauli_kraus(t);
    }
    case NoiseKind::Dephasing1q: return pauli_kraus({{{0}, 1.0 - rate}, {{3}, rate}});
    case NoiseKind::Dephasing2q:
        return pauli_kraus({{{0, 0}, 1.0 - rate}, {{0, 3}, rate / 3}, {{3, 0}, rate / 3}, {{3, 3}, rate / 3}});
    case NoiseKind::BitFlip1q: return pauli_kraus({{{0}, 1.0 - rate}, {{1}, rate}});
    case NoiseKind::BitFlip2q: return pauli_kraus({{{0, 0}, 1.0 - rate}, {{1, 1}, rate}});
    case NoiseKind::AmplitudeDamping1q: return amplitude_damping_kraus(rate);
    case NoiseKind::AmplitudeDamping2q: {
        std::vector<Mat> out;
        for(const auto &a : amplitude_damping_kraus(rate))
            for(const auto &b : amplitude_damping_kraus(rate)) out.push_back(kron(a, b));
        return out;
    }
    case NoiseKind::GlobalDepolarizing: {
        if(width > 4) throw std::invalid_argument("noise_kraus: global depolarizing Kraus list limited to 4 qubits");
        const double other = rate / (pow4(width) - 1.0);
        Terms        t;
        const int    count = 1 << (2 * width);
        for(int idx = 0; idx < count; ++idx) {
            std::vector<int> s;
            for(int q = width - 1; q >= 0; --q) s.push_back((idx >> (2 * q)) & 3);
            t.push_back({s, idx == 0 ? 1.0 - rate : other});
        }
        return pauli_kraus(t);
    }
    }
    throw std::invalid_argument("noise_kraus: unknown kind");
}

DenseSuperOp make_noise_superop(NoiseKind kind, double rate, int width) {
    if(kind != NoiseKind::GlobalDepolarizing) return superop_from_kraus(noise_kraus(kind, rate, width));
    check_rate(kind, rate, width);
    const double a = 1.0 - pow4(width) / (pow4(width) - 1.0) * rate;
    const double b = rate / (pow4(width) - 1.0);
    Mat          p = Mat::Identity(1, 1);
    for(int q = 0; q < width; ++q) p = kron(p, pauli_sum_superop());
    return {width, a * Mat::Identity(p.rows(), p.cols()) + b * p};
}

Mpo global_depolarizing_mpo(int n, double rate) {
    check_rate(NoiseKind::GlobalDepolarizing, rate, n);
    const double a  = 1.0 - pow4(n) / (pow4(n) - 1.0) * rate;
    const double b  = rate / (pow4(n) - 1.0);
    const Mat    id = Mat::Identity(4, 4);
    const Mat    p  = pauli_sum_superop();
    Sites        sites;
    auto         put = [](Tensor &t, Index l, Index r, const Mat &m) {
        for(Index x = 0; x < 4; ++x)
            for(Index y = 0; y < 4; ++y) t(l, x, y, r) = m(x, y);
    };
    if(n == 1) {
        Tensor t({1, 4, 4, 1});
        put(t, 0, 0, a * id + b * p);
        sites.push_back(std::move(t));
        return Mpo(std::move(sites));
    }
    for(int j = 0; j < n; ++j) {
        const bool first = j == 0, last = j == n - 1;
        Tensor     t({first ? 1 : 2, 4, 4, last ? 1 : 2});
        if(first) {
            put(t, 0, 0, a * id);
            put(t, 0, 1, b * p);
        } else if(last) {
            put(t, 0, 0, id);
            put(t, 1, 0, p);
        } else {
            put(t, 0, 0, id);
            put(t, 1, 1, p);
        }
        sites.push_back(std::move(t));
    }
    return Mpo(std::move(sites));
}

double sample_rate(double mean, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> dist(0.8 * mean, 1.2 * mean);
    return mean == 0.0 ? 0.0 : dist(rng);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(base ^ mix(stream));
}

std::string to_string(GateKind kind) {
    switch(kind) {
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::T: return "T";
    case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

std::string to_string(NoiseKind kind) {
    switch(kind) {
    case NoiseKind::Depolarizing1q: return "depolarizing1q";
    case NoiseKind::Depolarizing2q: return "depolarizing2q";
    case NoiseKind::Dephasing1q: return "dephasing1q";
    case NoiseKind::Dephasing2q: return "dephasing2q";
    case NoiseKind::BitFlip1q: return "bitflip1q";
    case NoiseKind::BitFlip2q: return "bitflip2q";
    case NoiseKind::AmplitudeDamping1q: return "amplitude_damping1q";
    case NoiseKind::AmplitudeDamping2q: return "amplitude_damping2q";
    case NoiseKind::GlobalDepolarizing: return "global_depolarizing";
    }
    return "?";
}

std::string to_string(NoiseFamily family) {
    switch(family) {
    case NoiseFamily::Depolarizing: return "depolarizing";
    case NoiseFamily::Dephasing: return "dephasing";
    case NoiseFamily::BitFlip: return "bitflip";
    case NoiseFamily::AmplitudeDamping: return "amplitude_damping";
    }
    return "?";
}

GateKind parse_gate(const std::string &s) {
    for(auto k : {GateKind::Z, GateKind::H, GateKind::S, GateKind::T, GateKind::CNOT})
        if(to_string(k) == s) return k;
    throw std::invalid_argument("unknown gate '" + s + "'");
}

NoiseKind parse_noise(const std::string &s) {
    for(int i = 0; i <= static_cast<int>(NoiseKind::GlobalDepolarizing); ++i)
        if(to_string(static_cast<NoiseKind>(i)) == s) return static_cast<NoiseKind>(i);
    throw std::invalid_argument("unknown noise kind '" + s + "'");
}

NoiseFamily parse_family(const std::string &s) {
    for(auto f : {NoiseFamily::Depolarizing, NoiseFamily::Dephasing, NoiseFamily::BitFlip, NoiseFamily::AmplitudeDamping})
        if(to_string(f) == s) return f;
    throw std::invalid_argument("unknown noise family '" + s + "'");
}

} // namespace qem
