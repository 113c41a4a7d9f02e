// Acceptance run: one PASS/FAIL line per criterion, followed by a tally.
//
//   acceptance [--only 1,2,...] [--known-failure N ...]
//
// The exit status is nonzero when a gating criterion fails, unless that criterion was listed with
// --known-failure. Criterion 9 is diagnostic and never affects the exit status.

#include "qem/bench.hpp"
#include "qem/pepo.hpp"
#include "qem/pipeline.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace qem;

namespace {

struct Outcome {
    bool        pass = false;
    std::string detail;
};

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

double gmean(const std::vector<double> &v) { return bench::summarize(v, bench::Statistic::Geometric).mean; }
double amean(const std::vector<double> &v) { return bench::summarize(v, bench::Statistic::Arithmetic).mean; }
double median(const std::vector<double> &v) { return bench::summarize(v, bench::Statistic::Arithmetic).median; }

double worst_increase(const std::vector<double> &e) {
    double w = 0.0;
    for(size_t i = 1; i < e.size(); ++i) w = std::max(w, e[i] - e[i - 1]);
    return w;
}

NoiseProfile family_profile(NoiseFamily f, double eps2, double global) {
    NoiseProfile p;
    p.mode        = NoiseProfile::Mode::Family;
    p.family      = f;
    p.eps2        = eps2;
    p.global_rate = global;
    return p;
}

NoiseProfile mixed_profile(double eps2, double global, int period) {
    NoiseProfile p;
    p.mode          = NoiseProfile::Mode::Mixed;
    p.eps2          = eps2;
    p.global_rate   = global;
    p.global_period = period;
    return p;
}

const std::vector<NoiseFamily> kFamilies = {NoiseFamily::Depolarizing, NoiseFamily::Dephasing, NoiseFamily::BitFlip,
                                            NoiseFamily::AmplitudeDamping};
const std::vector<double>      kEps2     = {1e-3, 1e-2, 1e-1};
const std::vector<Index>       kDPrime   = {1, 2, 3, 4};
constexpr int                  kSeeds    = 20;
constexpr int                  kSweeps   = 20;
constexpr double               kTol      = 1e-15;

// ---- shared n = 10, depth 4 instances (criteria 3, 4, 5, 11, 12) ----

struct Instance {
    double              unmitigated = 0.0; // D(U, U0)
    double              residual    = 0.0; // D(U' U, 1)
    bool                converged   = false;
    std::vector<double> site_errors;
    std::vector<double> mitigated; // D(E^-1 U, U0) for each D'
};

struct Group {
    NoiseFamily           family;
    double                eps2;
    std::vector<Instance> runs;
};

std::vector<Group> run_inverse_sweep(double global) {
    std::vector<Group> out;
    for(auto f : kFamilies)
        for(double e2 : kEps2) {
            Group g{f, e2, {}};
            for(int s = 1; s <= kSeeds; ++s) {
                const auto     spec = generate_test_circuit(10, 4, static_cast<std::uint64_t>(s), family_profile(f, e2, global));
                const Mpo      u    = compile_noisy_mpo(spec).first;
                const Mpo      u0   = compile_ideal_mpo(spec);
                InverseOptions opt;
                opt.bond_dim   = 5;
                opt.max_sweeps = kSweeps;
                opt.tol        = kTol;
                auto [x, rep]  = mpo_inverse(u, opt);
                Instance in;
                in.unmitigated = relative_distance_mpo(u, u0);
                in.residual    = rep.final_error / std::sqrt(norm_sq(multiply(x, u)) * rep.normalization);
                in.converged   = rep.converged;
                in.site_errors = rep.site_errors;
                for(Index dp : kDPrime) in.mitigated.push_back(relative_distance_mpo(multiply(noise_inverse(u0, x, dp).mpo, u), u0));
                g.runs.push_back(std::move(in));
            }
            out.push_back(std::move(g));
        }
    return out;
}

std::vector<double> column(const Group &g, const std::function<double(const Instance &)> &f) {
    std::vector<double> v;
    for(const auto &r : g.runs) v.push_back(f(r));
    return v;
}

std::string label(const Group &g) { return to_string(g.family) + "@" + fmt("%g", g.eps2); }

struct Sweeps {
    std::vector<Group> local;  // no global noise
    std::vector<Group> global; // post-layer global depolarizing 0.01
    bool               local_done = false, global_done = false;

    const std::vector<Group> &get_local() {
        if(!local_done) local = run_inverse_sweep(0.0), local_done = true;
        return local;
    }
    const std::vector<Group> &get_global() {
        if(!global_done) global = run_inverse_sweep(0.01), global_done = true;
        return global;
    }
};

Outcome inverse_quality(const std::vector<Group> &groups, double floor_tol, bool floor_all_families) {
    bool        pass = true;
    double      worst_ratio = 0.0, worst_floor = 0.0;
    std::string worst;
    for(const auto &g : groups) {
        const double un  = gmean(column(g, [](const Instance &r) { return r.unmitigated; }));
        const double res = gmean(column(g, [](const Instance &r) { return r.residual; }));
        worst_ratio      = std::max(worst_ratio, res / un);
        if(res > 1e-3 * un) pass = false, worst = label(g);
        const bool floor_applies = floor_all_families || g.family != NoiseFamily::Depolarizing;
        if(floor_applies) {
            worst_floor = std::max(worst_floor, res);
            if(res > floor_tol) pass = false, worst = label(g);
        }
    }
    std::string d = "max gmean(D(U'U,1))/gmean(D(U,U0)) = " + sci(worst_ratio) + " (<= 1e-3); max floor = " + sci(worst_floor) +
                    " (<= " + sci(floor_tol) + ")";
    if(!pass) d += "; first failing group " + worst;
    return {pass, d};
}

// ---- criterion 1: random circuits, including odd qubit counts ----

CircuitSpec random_circuit(int n, int depth, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> gate(0, 3), coin(0, 1), fam(0, 3);
    std::uniform_real_distribution<>   rate(0.0, 0.1);
    CircuitSpec                        c;
    c.n_qubits = n;
    for(int l = 0; l < depth; ++l) {
        LayerSpec layer;
        layer.two_qubit = n > 1 && coin(rng);
        if(layer.two_qubit) {
            for(int q = coin(rng); q + 1 < n; q += 2 + coin(rng))
                layer.gates.push_back({GateKind::CNOT, q, NoiseSpec{family_kind(static_cast<NoiseFamily>(fam(rng)), 2), rate(rng)}});
        } else {
            for(int q = 0; q < n; ++q)
                layer.gates.push_back({static_cast<GateKind>(gate(rng)), q,
                                       NoiseSpec{family_kind(static_cast<NoiseFamily>(fam(rng)), 1), rate(rng)}});
        }
        if(coin(rng) && coin(rng)) layer.global_rate = rate(rng);
        c.layers.push_back(std::move(layer));
    }
    return c;
}

Outcome criterion1() {
    std::mt19937_64 rng(2024);
    double          worst = 0.0;
    int             count = 0;
    for(int n = 1; n <= 5; ++n)
        for(int depth = 1; depth <= 6; ++depth)
            for(int k = 0; k < 2; ++k) {
                const CircuitSpec c   = random_circuit(n, depth, rng);
                const Mat         ref = compile_dense(c, true).matrix;
                const Mat         got = mpo_to_dense(compile_noisy_mpo(c).first).matrix;
                worst                 = std::max(worst, (got - ref).norm() / ref.norm());
                ++count;
            }
    for(int s = 1; s <= 10; ++s) {
        const auto c   = generate_test_circuit(2 + 2 * (s % 2), 6, static_cast<std::uint64_t>(s), mixed_profile(0.05, 0.02, 2));
        const Mat  ref = compile_dense(c, true).matrix;
        worst          = std::max(worst, (mpo_to_dense(compile_noisy_mpo(c).first).matrix - ref).norm() / ref.norm());
        ++count;
    }
    return {count >= 50 && worst <= 1e-10, std::to_string(count) + " circuits, max relative Frobenius error " + sci(worst) + " (<= 1e-10)"};
}

Outcome criterion2() {
    const Mat z    = make_gate_superop(GateKind::Z).matrix;
    Mat       want = Mat::Zero(4, 4);
    want.diagonal() << 1.0, -1.0, -1.0, 1.0;
    bool structure = true;
    for(Index i = 0; i < 4; ++i)
        for(Index j = 0; j < 4; ++j)
            if(i != j && z(i, j) != cplx(0.0)) structure = false;
    const double err = (z - want).cwiseAbs().maxCoeff();
    return {structure && err <= 1e-15, std::string("off-diagonal entries ") + (structure ? "exactly zero" : "nonzero") +
                                           ", max entry error " + sci(err) + " (<= 1e-15)"};
}

bool verbose = false;

Outcome criterion5(const std::vector<Group> &groups) {
    bool        pass = true;
    double      worst_d1 = 0.0, worst_d4 = 0.0, max_d4 = 0.0;
    std::string why;
    for(const auto &g : groups) {
        const double un    = gmean(column(g, [](const Instance &r) { return r.unmitigated; }));
        const double floor = gmean(column(g, [](const Instance &r) { return r.residual; }));
        const double d1    = gmean(column(g, [](const Instance &r) { return r.mitigated[0]; }));
        const double d4    = gmean(column(g, [](const Instance &r) { return r.mitigated[3]; }));
        if(verbose) {
            std::printf("  %-24s unmitigated %s floor %s  D'=1..4 gmean", label(g).c_str(), sci(un).c_str(), sci(floor).c_str());
            for(size_t k = 0; k < kDPrime.size(); ++k)
                std::printf(" %s", sci(gmean(column(g, [k](const Instance &r) { return r.mitigated[k]; }))).c_str());
            std::printf("\n");
        }
        worst_d1           = std::max(worst_d1, d1 / un);
        worst_d4           = std::max(worst_d4, d4 / floor);
        max_d4             = std::max(max_d4, d4);
        if(d1 > 0.05 * un) pass = false, why += " D'=1 " + label(g);
        if(d4 > 10.0 * floor) pass = false, why += " D'=4 " + label(g);
        double prev = INFINITY;
        for(size_t k = 0; k < kDPrime.size(); ++k) {
            const double m = median(column(g, [k](const Instance &r) { return r.mitigated[k]; }));
            if(m > prev) pass = false, why += " monotone " + label(g);
            prev = m;
        }
    }
    std::string d = "max D'=1 / unmitigated = " + sci(worst_d1) + " (<= 0.05); max D'=4 / floor = " + sci(worst_d4) +
                    " (<= 10), max D'=4 = " + sci(max_d4);
    if(!why.empty()) d += "; failing:" + why;
    return {pass, d};
}

Outcome criterion6() {
    int wins = 0;
    for(int s = 1; s <= kSeeds; ++s) {
        NoiseProfile p;
        p.global_rate  = 0.01;
        const auto spec = generate_test_circuit(10, 4, static_cast<std::uint64_t>(s), p);
        const Mpo  u    = compile_noisy_mpo(spec).first;
        const Mpo  u0   = compile_ideal_mpo(spec);
        auto [x, rep]   = mpo_inverse(u, 5, kSweeps, kTol);
        const double mit = relative_distance_mpo(multiply(noise_inverse(u0, x, 1).mpo, u), u0);
        if(mit < each_gate_floor(spec)) ++wins;
    }
    return {wins >= 16, std::to_string(wins) + "/" + std::to_string(kSeeds) + " seeds below the each-gate floor (>= 80%)"};
}

// ---- deep circuits (criteria 7, 8, 9) ----

QemRunRecord deep_run(int depth, double eps2, double global, std::uint64_t seed) {
    CircuitSpec spec = generate_test_circuit(10, depth, seed, mixed_profile(eps2, global, 4));
    set_partition(spec, depth / 4, 4);
    PipelineParams pp;
    pp.seed            = seed;
    pp.correction_eps1 = 1e-3;
    pp.channel_metrics = false;
    return run_pipeline(spec, pp);
}

struct DeepSeries {
    std::map<int, std::vector<double>> unmitigated, mitigated;
};

DeepSeries deep_sweep(double global, const std::vector<int> &depths) {
    DeepSeries out;
    for(int depth : depths)
        for(int s = 1; s <= kSeeds; ++s) {
            const auto rec = deep_run(depth, 1e-2, global, static_cast<std::uint64_t>(s));
            out.unmitigated[depth].push_back(rec.unmitigated);
            out.mitigated[depth].push_back(rec.mitigated);
        }
    return out;
}

Outcome criterion7(DeepSeries &g05) {
    const double un  = amean(g05.unmitigated.at(12));
    const double mit = amean(g05.mitigated.at(12));
    return {mit <= 0.5 * un, "depth 12: mean unmitigated " + sci(un) + ", mean mitigated " + sci(mit) + ", ratio " +
                                 fmt("%.4f", mit / un) + " (<= 0.5)"};
}

Outcome criterion8(const std::map<double, DeepSeries> &by_global) {
    std::vector<std::pair<double, double>> synth;
    for(double x : {4.0, 8.0, 12.0, 16.0}) synth.emplace_back(x, 0.37 * std::pow(x, 2.8));
    const double synth_err = std::abs(bench::fit_power_law(synth).exponent - 2.8);
    bool         pass      = synth_err <= 1e-10;
    std::string  d         = "synthetic exponent error " + sci(synth_err) + " (<= 1e-10)";
    for(const auto &[global, series] : by_global) {
        std::vector<std::pair<double, double>> un, mit;
        for(const auto &[depth, v] : series.unmitigated) un.emplace_back(depth, amean(v));
        for(const auto &[depth, v] : series.mitigated) mit.emplace_back(depth, amean(v));
        const double a_un = bench::fit_power_law(un).exponent, a_mit = bench::fit_power_law(mit).exponent;
        if(std::abs(a_un - a_mit) > 0.5) pass = false;
        d += "; global " + fmt("%g", global) + ": alpha_unmit " + fmt("%.3f", a_un) + ", alpha_mit " + fmt("%.3f", a_mit) +
             ", |diff| " + fmt("%.3f", std::abs(a_un - a_mit)) + " (<= 0.5)";
    }
    return {pass, d};
}

Outcome criterion9() {
    constexpr int             reps = 10;
    const std::vector<double> eps  = {0.05, 0.1, 0.15, 0.2};
    std::map<double, int>     adv, loss;
    std::string               d;
    for(double e : eps) {
        std::vector<double> ratios;
        for(int s = 1; s <= reps; ++s) {
            const auto rec = deep_run(12, e, 0.0, static_cast<std::uint64_t>(s));
            ratios.push_back(rec.mitigated / rec.unmitigated);
            adv[e] += ratios.back() < 1.0;
            loss[e] += ratios.back() >= 0.8;
        }
        d += (d.empty() ? "" : ", ") + std::string("eps2 ") + fmt("%g", e) + ": median ratio " + fmt("%.3f", median(ratios));
    }
    const bool pass = adv[0.05] > reps / 2 && adv[0.1] > reps / 2 && loss[0.2] > reps / 2;
    return {pass, d + " (advantage at <= 0.1, ratio >= 0.8 at 0.2 on a seed majority)"};
}

// ---- criterion 10: trace-infidelity bound and PEPO TP emergence ----

Mpo random_tp_mpo(int n, std::mt19937_64 &rng) {
    // random CPTP map from a Stiefel isometry split into two Kraus operators
    const Index                      d = Index(1) << n;
    std::normal_distribution<double> g;
    Mat                              a(2 * d, d);
    for(Index i = 0; i < a.rows(); ++i)
        for(Index j = 0; j < a.cols(); ++j) a(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(a);
    const Mat                 iso = qr.householderQ() * Mat::Identity(2 * d, d);
    return Mpo::from_dense(superop_from_kraus({iso.topRows(d), iso.bottomRows(d)}));
}

Outcome criterion10(std::vector<std::vector<double>> &histories) {
    std::mt19937_64                  rng(10);
    std::normal_distribution<double> gauss;
    double          worst_margin = -INFINITY;
    int             violations   = 0;
    for(int k = 0; k < 100; ++k) {
        const int    n     = 1 + k % 4;
        const Mpo    v     = random_tp_mpo(n, rng);
        const double scale = std::pow(10.0, -3.0 + 3.0 * (k % 7) / 6.0);
        const Mat    dv    = mpo_to_dense(v).matrix;
        Mat          pert(dv.rows(), dv.cols());
        for(Index i = 0; i < pert.rows(); ++i)
            for(Index j = 0; j < pert.cols(); ++j) pert(i, j) = cplx(gauss(rng), gauss(rng));
        const Mpo    u   = Mpo::from_dense(DenseSuperOp(n, dv + scale / pert.norm() * pert));
        const double lhs = trace_infidelity_mpo(u);
        const double rhs = (dv - mpo_to_dense(u).matrix).squaredNorm();
        worst_margin        = std::max(worst_margin, lhs - rhs);
        if(lhs > rhs + 1e-9) ++violations;
    }
    double worst_ti = 0.0;
    for(double e2 : kEps2)
        for(std::uint64_t s = 1; s <= 5; ++s) {
            NoiseProfile p;
            p.mode           = NoiseProfile::Mode::Family;
            p.eps2           = e2;
            const Circuit2D c = generate_test_circuit_2d(3, 3, 4, s, p);
            auto [x, rep]     = pepo_inverse(pepo_from_circuit_2d(c), 5, {}, 15, 1e-12);
            worst_ti          = std::max(worst_ti, rep.trace_infidelity_history.back());
            histories.push_back(rep.site_errors);
        }
    return {violations == 0 && worst_ti < 1e-3, std::to_string(violations) + "/100 bound violations (max lhs - rhs " + sci(worst_margin) +
                                                   "); PEPO 3x3 depth 4 bond 5, 15 instances: max final trace infidelity " +
                                                   sci(worst_ti) + " (< 1e-3)"};
}

Outcome criterion11(Sweeps &sw) {
    int conv = 0, total = 0;
    for(const auto &g : sw.get_local())
        for(const auto &r : g.runs) conv += r.converged, ++total;
    const double frac = static_cast<double>(conv) / total;
    return {frac >= 0.9, std::to_string(conv) + "/" + std::to_string(total) + " criterion-3 instances converged within " +
                             std::to_string(kSweeps) + " sweeps (>= 90%)"};
}

Outcome criterion12(Sweeps &sw, const std::vector<std::vector<double>> &extra) {
    double worst = 0.0;
    size_t count = 0;
    for(const auto *groups : {&sw.get_local(), &sw.get_global()})
        for(const auto &g : *groups)
            for(const auto &r : g.runs) worst = std::max(worst, worst_increase(r.site_errors)), ++count;
    for(const auto &h : extra) worst = std::max(worst, worst_increase(h)), ++count;
    return {worst <= 1e-12, std::to_string(count) + " histories, largest site-update increase of e/4^n " + sci(worst) + " (<= 1e-12)"};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App         app{"Acceptance criteria for the MPO error-mitigation library"};
    std::vector<int> only, known;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 12));
    app.add_option("--known-failure", known, "Criteria whose failure does not change the exit status")
        ->delimiter(',')
        ->check(CLI::Range(1, 12));
    app.add_flag("--verbose", verbose, "Print per-group values where available");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected(only.begin(), only.end()), tolerated(known.begin(), known.end());

    Sweeps                           sweeps;
    std::vector<std::vector<double>> pepo_histories;
    std::map<double, DeepSeries>     deep;
    auto                             deep_for = [&](double global) -> DeepSeries & {
        if(!deep.count(global)) deep[global] = deep_sweep(global, {4, 8, 12, 16});
        return deep[global];
    };

    const std::vector<std::function<Outcome()>> criteria = {
        criterion1,
        criterion2,
        [&] { return inverse_quality(sweeps.get_local(), 1e-7, false); },
        [&] { return inverse_quality(sweeps.get_global(), 1e-6, true); },
        [&] { return criterion5(sweeps.get_local()); },
        criterion6,
        [&] { return criterion7(deep_for(0.05)); },
        [&] {
            deep_for(0.0);
            deep_for(0.05);
            return criterion8(deep);
        },
        criterion9,
        [&] { return criterion10(pepo_histories); },
        [&] { return criterion11(sweeps); },
        [&] {
            if(pepo_histories.empty()) criterion10(pepo_histories);
            return criterion12(sweeps, pepo_histories);
        },
    };

    int passed = 0, run = 0, gating_failures = 0;
    for(int k = 1; k <= 12; ++k) {
        if(!selected.empty() && !selected.count(k)) continue;
        const auto    t0  = std::chrono::steady_clock::now();
        const Outcome out = criteria[static_cast<size_t>(k - 1)]();
        const double  sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++run;
        passed += out.pass;
        std::string note;
        if(k == 9) note = " [diagnostic]";
        else if(tolerated.count(k)) note = " [known failure]";
        if(!out.pass && k != 9 && !tolerated.count(k)) ++gating_failures;
        std::printf("criterion %2d: %s%s  %s  (%.1fs)\n", k, out.pass ? "PASS" : "FAIL", note.c_str(), out.detail.c_str(), sec);
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%d criteria passed, %d gating failure(s)\n", passed, run, gating_failures);
    return gating_failures == 0 ? 0 : 1;
}
