#include "qem/bench.hpp"

#include "qem/circuit.hpp"
#include "qem/inverse.hpp"
#include "qem/pepo.hpp"
#include "qem/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qem::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<ExperimentId, std::string>> kIds = {
    {ExperimentId::MpoInverseSweep, "mpo-inverse-sweep"}, {ExperimentId::NoiseInverseDprime, "noise-inverse-dprime"},
    {ExperimentId::DeepQem, "deep-qem"},                  {ExperimentId::SizeScaling, "size-scaling"},
    {ExperimentId::ErrThreshold, "err-threshold"},        {ExperimentId::PepoInverse, "pepo-inverse"},
    {ExperimentId::AlphaVsNq, "alpha-vs-nq"}};

bool is_deep_family(ExperimentId id) {
    return id == ExperimentId::DeepQem || id == ExperimentId::SizeScaling || id == ExperimentId::ErrThreshold ||
           id == ExperimentId::AlphaVsNq;
}

std::string fmt_num(double v) {
    if(std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

std::string fmt_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

template<typename T>
std::string fmt_param(T v)
    requires std::is_integral_v<T>
{
    return std::to_string(v);
}

std::string join(const std::vector<std::string> &parts, char sep) {
    std::string out;
    for(size_t i = 0; i < parts.size(); ++i) {
        if(i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string              cur;
    std::istringstream       is(line);
    while(std::getline(is, cur, sep)) out.push_back(cur);
    if(!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::string timestamp() {
    const std::time_t t = std::time(nullptr);
    char              buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

NoiseProfile profile_for(const std::string &family, double eps2, double eps1, double global_rate, int global_period) {
    NoiseProfile p;
    if(family == "mixed") {
        p.mode = NoiseProfile::Mode::Mixed;
    } else if(family == "none") {
        p.mode = NoiseProfile::Mode::None;
    } else {
        p.mode   = NoiseProfile::Mode::Family;
        p.family = parse_family(family);
    }
    p.eps2          = eps2;
    p.eps1          = eps1;
    p.global_rate   = global_rate;
    p.global_period = global_period;
    return p;
}

double worst_increase(const std::vector<double> &e) {
    double w = 0.0;
    for(size_t i = 1; i < e.size(); ++i) w = std::max(w, e[i] - e[i - 1]);
    return w;
}

struct Task {
    std::vector<std::vector<std::string>>                           row_params;
    std::vector<int>                                                ordinals;
    std::uint64_t                                                   seed = 0;
    std::function<std::vector<std::vector<double>>(std::uint64_t)> run;
};

struct Plan {
    std::vector<std::string> param_columns;
    std::vector<Metric>      metrics;
    std::vector<Task>        tasks;
};

// ---- experiment definitions ----

Plan plan_mpo_inverse(const ExperimentConfig &cfg) {
    Plan      plan;
    Statistic g        = Statistic::Geometric;
    plan.param_columns = {"n_qubits", "depth", "family", "eps2", "global_rate", "d_inv"};
    plan.metrics       = {{"unmitigated", g},
                          {"inverse_residual", g},
                          {"trace_infidelity", g},
                          {"sweeps", Statistic::Arithmetic},
                          {"converged", Statistic::Arithmetic},
                          {"worst_site_increase", Statistic::Arithmetic},
                          {"u_bond", Statistic::Arithmetic}};
    int ordinal = 0;
    for(int n : cfg.n_qubits)
        for(int depth : cfg.depth)
            for(const auto &fam : cfg.families)
                for(double e2 : cfg.eps2)
                    for(double gr : cfg.global_rate)
                        for(Index dinv : cfg.d_inv) {
                            std::vector<std::string> params{fmt_param(n),  fmt_param(depth), fam,
                                                            fmt_param(e2), fmt_param(gr),    fmt_param(static_cast<long long>(dinv))};
                            for(int r = 0; r < cfg.reps; ++r) {
                                Task t;
                                t.row_params = {params};
                                t.ordinals   = {ordinal};
                                t.seed       = cfg.seed + static_cast<std::uint64_t>(r);
                                t.run        = [=, &cfg](std::uint64_t seed) {
                                    const CircuitSpec spec =
                                        generate_test_circuit(n, depth, seed, profile_for(fam, e2, cfg.eps1, gr, 1), parse_placement(cfg.placement));
                                    const Mpo      u  = compile_noisy_mpo(spec, cfg.d_compile).first;
                                    const Mpo      u0 = compile_ideal_mpo(spec);
                                    InverseOptions opt;
                                    opt.bond_dim   = dinv;
                                    opt.max_sweeps = cfg.max_sweeps;
                                    opt.tol        = cfg.tol;
                                    auto [x, rep]  = mpo_inverse(u, opt);
                                    const double inv = rep.final_error / std::sqrt(norm_sq(multiply(x, u)) * rep.normalization);
                                    return std::vector<std::vector<double>>{{relative_distance_mpo(u, u0), inv,
                                                                             rep.trace_infidelity_history.back(),
                                                                             static_cast<double>(rep.sweeps_used),
                                                                             rep.converged ? 1.0 : 0.0,
                                                                             worst_increase(rep.site_errors),
                                                                             static_cast<double>(u.max_bond())}};
                                };
                                plan.tasks.push_back(std::move(t));
                            }
                            ++ordinal;
                        }
    return plan;
}

Plan plan_noise_inverse(const ExperimentConfig &cfg) {
    Plan      plan;
    Statistic g        = Statistic::Geometric;
    plan.param_columns = {"n_qubits", "depth", "family", "eps2", "global_rate", "d_inv", "d_prime"};
    plan.metrics       = {{"unmitigated", g}, {"mitigated", g}, {"inverse_residual", g}, {"each_gate_floor", g}};
    int ordinal        = 0;
    for(int n : cfg.n_qubits)
        for(int depth : cfg.depth)
            for(const auto &fam : cfg.families)
                for(double e2 : cfg.eps2)
                    for(double gr : cfg.global_rate)
                        for(Index dinv : cfg.d_inv) {
                            std::vector<std::vector<std::string>> params;
                            std::vector<int>                      ords;
                            for(Index dp : cfg.d_prime) {
                                params.push_back({fmt_param(n), fmt_param(depth), fam, fmt_param(e2), fmt_param(gr),
                                                  fmt_param(static_cast<long long>(dinv)), fmt_param(static_cast<long long>(dp))});
                                ords.push_back(ordinal++);
                            }
                            for(int r = 0; r < cfg.reps; ++r) {
                                Task t;
                                t.row_params = params;
                                t.ordinals   = ords;
                                t.seed       = cfg.seed + static_cast<std::uint64_t>(r);
                                t.run        = [=, &cfg](std::uint64_t seed) {
                                    const CircuitSpec spec =
                                        generate_test_circuit(n, depth, seed, profile_for(fam, e2, cfg.eps1, gr, 1), parse_placement(cfg.placement));
                                    const Mpo      u  = compile_noisy_mpo(spec, cfg.d_compile).first;
                                    const Mpo      u0 = compile_ideal_mpo(spec);
                                    InverseOptions opt;
                                    opt.bond_dim    = dinv;
                                    opt.max_sweeps  = cfg.max_sweeps;
                                    opt.tol         = cfg.tol;
                                    auto [x, rep]   = mpo_inverse(u, opt);
                                    const double un  = relative_distance_mpo(u, u0);
                                    const double inv = rep.final_error / std::sqrt(norm_sq(multiply(x, u)) * rep.normalization);
                                    const double floor = gr > 0.0 ? each_gate_floor(spec, cfg.d_compile) : kNaN;
                                    std::vector<std::vector<double>> out;
                                    for(Index dp : cfg.d_prime) {
                                        const NoiseInverse ni = noise_inverse(u0, x, dp);
                                        out.push_back({un, relative_distance_mpo(multiply(ni.mpo, u), u0), inv, floor});
                                    }
                                    return out;
                                };
                                plan.tasks.push_back(std::move(t));
                            }
                        }
    return plan;
}

Plan plan_deep(const ExperimentConfig &cfg) {
    Plan      plan;
    Statistic a        = Statistic::Arithmetic;
    plan.param_columns = {"n_qubits", "depth", "parts", "family", "eps2", "global_rate", "d_inv", "d_prime", "chi"};
    plan.metrics       = {{"unmitigated", a},     {"mitigated", a},          {"ratio", a},
                          {"trace_mitigated", a}, {"sim_discarded", a},      {"sim_max_bond", a},
                          {"channel_unmitigated_mean", Statistic::Geometric},
                          {"channel_mitigated_mean", Statistic::Geometric},
                          {"all_converged", a}};
    int ordinal = 0;
    for(int n : cfg.n_qubits)
        for(int depth : cfg.depth)
            for(const auto &fam : cfg.families)
                for(double e2 : cfg.eps2)
                    for(double gr : cfg.global_rate)
                        for(Index dinv : cfg.d_inv)
                            for(Index dp : cfg.d_prime) {
                                const int d0    = cfg.layers_per_part;
                                const int parts = depth / d0;
                                std::vector<std::string> params{fmt_param(n),  fmt_param(depth), fmt_param(parts),
                                                                fam,           fmt_param(e2),    fmt_param(gr),
                                                                fmt_param(static_cast<long long>(dinv)),
                                                                fmt_param(static_cast<long long>(dp)),
                                                                fmt_param(static_cast<long long>(cfg.chi))};
                                for(int r = 0; r < cfg.reps; ++r) {
                                    Task t;
                                    t.row_params = {params};
                                    t.ordinals   = {ordinal};
                                    t.seed       = cfg.seed + static_cast<std::uint64_t>(r);
                                    t.run        = [=, &cfg](std::uint64_t seed) {
                                        CircuitSpec spec = generate_test_circuit(
                                            n, depth, seed, profile_for(fam, e2, cfg.eps1, gr, d0), parse_placement(cfg.placement));
                                        set_partition(spec, parts, d0);
                                        PipelineParams pp;
                                        pp.d_compile  = cfg.d_compile;
                                        pp.d_inv      = dinv;
                                        pp.d_prime    = dp;
                                        pp.max_sweeps = cfg.max_sweeps;
                                        pp.tol        = cfg.tol;
                                        pp.correction_eps1 =
                                            cfg.correction_eps1 < 0.0 ? std::nullopt : std::optional<double>(cfg.correction_eps1);
                                        pp.seed    = seed;
                                        pp.sim.chi = cfg.chi;
                                        const QemRunRecord rec = run_pipeline(spec, pp);
                                        double cu = 0.0, cm = 0.0;
                                        bool   conv = true;
                                        for(const auto &p : rec.parts) {
                                            cu += p.unmitigated / static_cast<double>(rec.parts.size());
                                            cm += p.mitigated / static_cast<double>(rec.parts.size());
                                            conv = conv && p.converged;
                                        }
                                        return std::vector<std::vector<double>>{
                                            {rec.unmitigated, rec.mitigated, rec.unmitigated > 0 ? rec.mitigated / rec.unmitigated : kNaN,
                                             rec.trace_mitigated, rec.sim_discarded, static_cast<double>(rec.sim_max_bond), cu, cm,
                                             conv ? 1.0 : 0.0}};
                                    };
                                    plan.tasks.push_back(std::move(t));
                                }
                                ++ordinal;
                            }
    return plan;
}

Plan plan_pepo(const ExperimentConfig &cfg) {
    Plan      plan;
    Statistic g        = Statistic::Geometric;
    plan.param_columns = {"rows", "cols", "depth", "family", "eps2", "bond", "boundary_chi", "sweep"};
    plan.metrics       = {{"unmitigated", g},
                          {"distance", g},
                          {"trace_infidelity", g},
                          {"self_consistency", Statistic::Arithmetic},
                          {"converged", Statistic::Arithmetic}};
    int ordinal = 0;
    for(int depth : cfg.depth)
        for(const auto &fam : cfg.families)
            for(double e2 : cfg.eps2)
                for(Index bond : cfg.d_inv) {
                    std::vector<std::vector<std::string>> params;
                    std::vector<int>                      ords;
                    for(int s = 0; s <= cfg.max_sweeps; ++s) {
                        params.push_back({fmt_param(cfg.grid_rows), fmt_param(cfg.grid_cols), fmt_param(depth), fam, fmt_param(e2),
                                          fmt_param(static_cast<long long>(bond)),
                                          fmt_param(static_cast<long long>(cfg.boundary_chi)), fmt_param(s)});
                        ords.push_back(ordinal++);
                    }
                    for(int r = 0; r < cfg.reps; ++r) {
                        Task t;
                        t.row_params = params;
                        t.ordinals   = ords;
                        t.seed       = cfg.seed + static_cast<std::uint64_t>(r);
                        t.run        = [=, &cfg](std::uint64_t seed) {
                            const Circuit2D circ =
                                generate_test_circuit_2d(cfg.grid_rows, cfg.grid_cols, depth, seed, profile_for(fam, e2, cfg.eps1, 0.0, 1));
                            const Pepo u  = pepo_from_circuit_2d(circ, cfg.d_compile);
                            const Pepo u0 = pepo_from_circuit_2d(strip_noise(circ));
                            BoundaryContractionConfig bc;
                            bc.chi            = cfg.boundary_chi;
                            const double un   = relative_distance_pepo(u, u0, bc);
                            const double self = norm_self_consistency(u, bc);
                            auto [x, rep]     = pepo_inverse(u, bond, bc, cfg.max_sweeps, cfg.tol);
                            std::vector<std::vector<double>> out;
                            for(int s = 0; s <= cfg.max_sweeps; ++s) {
                                const size_t k = std::min(static_cast<size_t>(s), rep.distance_history.size() - 1);
                                out.push_back({un, rep.distance_history[k], rep.trace_infidelity_history[k], self,
                                               rep.converged && static_cast<int>(k) == rep.sweeps_used ? 1.0 : 0.0});
                            }
                            return out;
                        };
                        plan.tasks.push_back(std::move(t));
                    }
                }
    return plan;
}

Plan make_plan(const ExperimentConfig &cfg) {
    switch(cfg.id) {
        case ExperimentId::MpoInverseSweep: return plan_mpo_inverse(cfg);
        case ExperimentId::NoiseInverseDprime: return plan_noise_inverse(cfg);
        case ExperimentId::PepoInverse: return plan_pepo(cfg);
        default: return plan_deep(cfg);
    }
}

// Power-law fits of summary means against `x_column`, grouped over the remaining parameters.
std::vector<FitRecord> fit_table(const ResultTable &t, const std::string &x_column, const std::vector<std::string> &ignore,
                                 const std::vector<std::string> &series) {
    const int xi = t.param_index(x_column);
    std::map<std::string, std::vector<const SummaryRow *>> groups;
    std::vector<std::string>                               order;
    for(const auto &row : t.summary) {
        std::vector<std::string> key;
        for(size_t i = 0; i < t.param_columns.size(); ++i) {
            const auto &name = t.param_columns[i];
            if(static_cast<int>(i) == xi || std::find(ignore.begin(), ignore.end(), name) != ignore.end()) continue;
            key.push_back(name + "=" + row.params[i]);
        }
        const std::string k = join(key, ';');
        if(!groups.count(k)) order.push_back(k);
        groups[k].push_back(&row);
    }
    std::vector<FitRecord> out;
    for(const auto &k : order) {
        std::vector<FitRecord> fits;
        for(const auto &s : series) {
            const int                               mi = t.metric_index(s);
            std::vector<std::pair<double, double>> pts;
            for(const auto *row : groups[k]) {
                const double x = std::stod(row->params[static_cast<size_t>(xi)]);
                const double y = row->metrics[static_cast<size_t>(mi)].mean;
                if(x > 0 && y > 0 && std::isfinite(y)) pts.emplace_back(x, y);
            }
            std::sort(pts.begin(), pts.end());
            if(pts.size() < 3) continue;
            fits.push_back({k, s, x_column, fit_power_law(pts)});
        }
        if(fits.size() == 2) {
            FitRecord d{k, "delta", x_column, {}};
            d.fit.exponent  = fits[0].fit.exponent - fits[1].fit.exponent;
            d.fit.intercept = fits[0].fit.intercept - fits[1].fit.intercept;
            d.fit.r2        = kNaN;
            fits.push_back(d);
        }
        out.insert(out.end(), fits.begin(), fits.end());
    }
    return out;
}

template<typename T>
std::vector<T> json_list(const nlohmann::json &j) {
    if(j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

} // namespace

std::string to_string(ExperimentId id) {
    for(const auto &[k, v] : kIds)
        if(k == id) return v;
    throw std::invalid_argument("unknown experiment id");
}

ExperimentId parse_experiment(const std::string &s) {
    for(const auto &[k, v] : kIds)
        if(v == s) return k;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

std::vector<ExperimentId> all_experiments() {
    std::vector<ExperimentId> out;
    for(const auto &kv : kIds) out.push_back(kv.first);
    return out;
}

std::string to_string(Statistic s) { return s == Statistic::Geometric ? "geometric" : "arithmetic"; }

Statistic statistic_for(ExperimentId id) {
    switch(id) {
        case ExperimentId::MpoInverseSweep:
        case ExperimentId::NoiseInverseDprime:
        case ExperimentId::PepoInverse: return Statistic::Geometric;
        default: return Statistic::Arithmetic;
    }
}

void ExperimentConfig::validate() const {
    auto nonempty = [](bool empty, const char *what) {
        if(empty) throw std::invalid_argument(std::string("config: '") + what + "' must not be empty");
    };
    nonempty(n_qubits.empty(), "n_qubits");
    nonempty(depth.empty(), "depth");
    nonempty(families.empty(), "families");
    nonempty(eps2.empty(), "eps2");
    nonempty(global_rate.empty(), "global_rate");
    nonempty(d_inv.empty(), "d_inv");
    nonempty(d_prime.empty(), "d_prime");
    if(reps < 1) throw std::invalid_argument("config: reps must be >= 1");
    if(threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if(max_sweeps < 1) throw std::invalid_argument("config: max_sweeps must be >= 1");
    if(chi < 1) throw std::invalid_argument("config: chi must be >= 1");
    if(d_compile < 0 || boundary_chi < 0) throw std::invalid_argument("config: bond caps must be >= 0");
    parse_placement(placement);
    for(const auto &f : families)
        if(f != "mixed" && f != "none") parse_family(f);
    for(int n : n_qubits)
        if(n < 2 || n % 2) throw std::invalid_argument("config: n_qubits must be even and >= 2");
    for(int d : depth) {
        if(d < 1) throw std::invalid_argument("config: depth must be >= 1");
        if(is_deep_family(id) && (d < layers_per_part || d % layers_per_part))
            throw std::invalid_argument("config: depth " + std::to_string(d) + " is not a multiple of layers_per_part");
    }
    for(double e : eps2)
        if(e < 0.0) throw std::invalid_argument("config: eps2 must be >= 0");
    for(double g : global_rate)
        if(g < 0.0) throw std::invalid_argument("config: global_rate must be >= 0");
    for(Index d : d_inv)
        if(d < 1) throw std::invalid_argument("config: d_inv must be >= 1");
    for(Index d : d_prime)
        if(d < 1) throw std::invalid_argument("config: d_prime must be >= 1");
    if(layers_per_part < 1) throw std::invalid_argument("config: layers_per_part must be >= 1");
    if(id == ExperimentId::PepoInverse && (grid_rows < 2 || grid_cols < 2))
        throw std::invalid_argument("config: grid must be at least 2x2");
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"experiment", bench::to_string(id)},
            {"n_qubits", n_qubits},
            {"depth", depth},
            {"families", families},
            {"eps2", eps2},
            {"global_rate", global_rate},
            {"d_inv", d_inv},
            {"d_prime", d_prime},
            {"eps1", eps1},
            {"layers_per_part", layers_per_part},
            {"d_compile", d_compile},
            {"correction_eps1", correction_eps1},
            {"chi", chi},
            {"max_sweeps", max_sweeps},
            {"tol", tol},
            {"placement", placement},
            {"grid_rows", grid_rows},
            {"grid_cols", grid_cols},
            {"boundary_chi", boundary_chi},
            {"reps", reps},
            {"seed", seed},
            {"threads", threads},
            {"out_dir", out_dir}};
}

void ExperimentConfig::apply_json(const nlohmann::json &j) {
    if(!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for(const auto &[key, v] : j.items()) {
        try {
            if(key == "experiment") id = parse_experiment(v.get<std::string>());
            else if(key == "n_qubits") n_qubits = json_list<int>(v);
            else if(key == "depth") depth = json_list<int>(v);
            else if(key == "families") families = json_list<std::string>(v);
            else if(key == "eps2") eps2 = json_list<double>(v);
            else if(key == "global_rate") global_rate = json_list<double>(v);
            else if(key == "d_inv") d_inv = json_list<Index>(v);
            else if(key == "d_prime") d_prime = json_list<Index>(v);
            else if(key == "eps1") eps1 = v.get<double>();
            else if(key == "layers_per_part") layers_per_part = v.get<int>();
            else if(key == "d_compile") d_compile = v.get<Index>();
            else if(key == "correction_eps1") correction_eps1 = v.is_null() ? -1.0 : v.get<double>();
            else if(key == "chi") chi = v.get<Index>();
            else if(key == "max_sweeps") max_sweeps = v.get<int>();
            else if(key == "tol") tol = v.get<double>();
            else if(key == "placement") placement = v.get<std::string>();
            else if(key == "grid_rows") grid_rows = v.get<int>();
            else if(key == "grid_cols") grid_cols = v.get<int>();
            else if(key == "boundary_chi") boundary_chi = v.get<Index>();
            else if(key == "reps") reps = v.get<int>();
            else if(key == "seed") seed = v.get<std::uint64_t>();
            else if(key == "threads") threads = v.get<int>();
            else if(key == "out_dir") out_dir = v.get<std::string>();
            else throw std::invalid_argument("config: unknown key '" + key + "'");
        } catch(const nlohmann::json::exception &e) {
            throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
        }
    }
}

ExperimentConfig preset(ExperimentId id, bool full_scale) {
    ExperimentConfig c;
    c.id                                     = id;
    const std::vector<std::string> families4 = {"depolarizing", "dephasing", "bitflip", "amplitude_damping"};
    switch(id) {
        case ExperimentId::MpoInverseSweep:
            c.n_qubits    = {10};
            c.depth       = {4};
            c.families    = families4;
            c.eps2        = {1e-3, 1e-2, 1e-1};
            c.global_rate = {0.0, 0.01};
            c.d_inv       = {4, 5};
            c.reps        = full_scale ? 200 : 20;
            break;
        case ExperimentId::NoiseInverseDprime:
            c.n_qubits    = {10};
            c.depth       = {4};
            c.families    = {"depolarizing"};
            c.eps2        = {1e-3, 1e-1};
            c.global_rate = {0.0, 0.01};
            c.d_inv       = {5};
            c.d_prime     = {1, 2, 3, 4};
            c.reps        = full_scale ? 200 : 20;
            break;
        case ExperimentId::DeepQem:
            c.n_qubits    = {full_scale ? 20 : 10};
            c.depth       = full_scale ? std::vector<int>{4, 8, 12, 16, 20} : std::vector<int>{4, 8, 12, 16};
            c.families    = {"mixed"};
            c.eps2        = {1e-2};
            c.global_rate = {0.0, 0.05};
            c.d_compile   = 5;
            c.reps        = full_scale ? 200 : 20;
            break;
        case ExperimentId::SizeScaling:
            c.n_qubits    = full_scale ? std::vector<int>{8, 12, 16, 20} : std::vector<int>{4, 6, 8, 10};
            c.depth       = {full_scale ? 20 : 12};
            c.families    = {"mixed"};
            c.eps2        = {1e-2};
            c.d_compile   = 5;
            c.reps        = full_scale ? 200 : 10;
            break;
        case ExperimentId::ErrThreshold:
            c.n_qubits    = {full_scale ? 20 : 10};
            c.depth       = {full_scale ? 20 : 12};
            c.families    = {"mixed"};
            c.eps2        = {0.05, 0.1, 0.15, 0.2};
            c.d_compile   = 5;
            c.reps        = full_scale ? 200 : 10;
            break;
        case ExperimentId::PepoInverse:
            c.grid_rows  = full_scale ? 6 : 3;
            c.grid_cols  = full_scale ? 6 : 3;
            c.depth      = {full_scale ? 8 : 4};
            c.families   = {"depolarizing"};
            c.eps2       = {1e-3, 1e-2, 1e-1};
            c.d_inv      = {5};
            c.max_sweeps = 15;
            c.tol        = 1e-12;
            c.reps       = full_scale ? 20 : 5;
            break;
        case ExperimentId::AlphaVsNq:
            c.n_qubits  = full_scale ? std::vector<int>{8, 12, 16, 20} : std::vector<int>{4, 6, 8, 10};
            c.depth     = full_scale ? std::vector<int>{4, 8, 12, 16, 20} : std::vector<int>{4, 8, 12, 16};
            c.families  = {"mixed"};
            c.eps2      = {1e-2};
            c.d_compile = 5;
            c.reps      = full_scale ? 200 : 5;
            break;
    }
    return c;
}

FitResult fit_power_law(const std::vector<std::pair<double, double>> &points) {
    if(points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
    FitResult f;
    for(const auto &[x, y] : points) {
        if(!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("fit_power_law: data must be positive");
        f.x.push_back(x);
        f.y.push_back(y);
    }
    const auto   n  = static_cast<double>(points.size());
    double       mx = 0.0, my = 0.0;
    for(const auto &[x, y] : points) {
        mx += std::log10(x) / n;
        my += std::log10(y) / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for(const auto &[x, y] : points) {
        const double dx = std::log10(x) - mx, dy = std::log10(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if(sxx == 0.0) throw std::invalid_argument("fit_power_law: x values must not all be equal");
    f.exponent  = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double ssr  = 0.0;
    for(const auto &[x, y] : points) {
        const double r = std::log10(y) - (f.intercept + f.exponent * std::log10(x));
        ssr += r * r;
    }
    f.r2 = syy == 0.0 ? 1.0 : std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    return f;
}

Summary summarize(const std::vector<double> &values, Statistic stat) {
    std::vector<double> v;
    for(double x : values)
        if(std::isfinite(x) && (stat == Statistic::Arithmetic || x > 0.0)) v.push_back(stat == Statistic::Geometric ? std::log10(x) : x);
    Summary s;
    s.count = static_cast<int>(v.size());
    if(v.empty()) {
        s.mean = s.spread = s.median = kNaN;
        return s;
    }
    const double n    = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double       var  = 0.0;
    for(double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    std::sort(v.begin(), v.end());
    const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    if(stat == Statistic::Geometric) {
        s.mean   = std::pow(10.0, mean);
        s.spread = std::pow(10.0, sd);
        s.median = std::pow(10.0, med);
    } else {
        s.mean   = mean;
        s.spread = sd;
        s.median = med;
    }
    return s;
}

std::vector<SummaryRow> summarize_rows(const std::vector<std::string> &param_columns, const std::vector<Metric> &metrics,
                                       const std::vector<ResultRow> &rows) {
    (void)param_columns;
    std::vector<SummaryRow>                       out;
    std::map<std::vector<std::string>, size_t>    index;
    std::vector<std::vector<std::vector<double>>> values;
    for(const auto &r : rows) {
        auto it = index.find(r.params);
        if(it == index.end()) {
            it = index.emplace(r.params, out.size()).first;
            out.push_back({r.params, {}});
            values.emplace_back(metrics.size());
        }
        if(r.status != "ok") continue;
        for(size_t m = 0; m < metrics.size(); ++m) values[it->second][m].push_back(r.metrics[m]);
    }
    for(size_t p = 0; p < out.size(); ++p)
        for(size_t m = 0; m < metrics.size(); ++m) out[p].metrics.push_back(summarize(values[p][m], metrics[m].stat));
    return out;
}

int ResultTable::failures() const {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const ResultRow &r) { return r.status != "ok"; }));
}

int ResultTable::metric_index(const std::string &name) const {
    for(size_t i = 0; i < metrics.size(); ++i)
        if(metrics[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown metric '" + name + "'");
}

int ResultTable::param_index(const std::string &name) const {
    for(size_t i = 0; i < param_columns.size(); ++i)
        if(param_columns[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown parameter '" + name + "'");
}

std::string ResultTable::rows_csv() const {
    std::vector<std::string> head = param_columns;
    head.emplace_back("seed");
    for(const auto &m : metrics) head.push_back(m.name);
    head.emplace_back("status");
    std::string out = join(head, ',') + "\n";
    for(const auto &r : rows) {
        std::vector<std::string> cells = r.params;
        cells.push_back(std::to_string(r.seed));
        for(double v : r.metrics) cells.push_back(fmt_num(v));
        cells.push_back(sanitize(r.status));
        out += join(cells, ',') + "\n";
    }
    return out;
}

std::string ResultTable::summary_csv() const {
    std::vector<std::string> head = param_columns;
    head.emplace_back("count");
    for(const auto &m : metrics) {
        const bool g = m.stat == Statistic::Geometric;
        head.push_back(m.name + (g ? "_gmean" : "_mean"));
        head.push_back(m.name + (g ? "_gstd" : "_std"));
        head.push_back(m.name + "_median");
    }
    std::string out = join(head, ',') + "\n";
    for(const auto &s : summary) {
        std::vector<std::string> cells = s.params;
        int                      count = 0;
        for(const auto &r : rows)
            if(r.params == s.params && r.status == "ok") ++count;
        cells.push_back(std::to_string(count));
        for(const auto &m : s.metrics) {
            cells.push_back(fmt_num(m.mean));
            cells.push_back(fmt_num(m.spread));
            cells.push_back(fmt_num(m.median));
        }
        out += join(cells, ',') + "\n";
    }
    return out;
}

std::string ResultTable::fits_csv() const {
    std::string out = "group,x_column,series,exponent,intercept,r2,points\n";
    for(const auto &f : fits)
        out += join({f.group.empty() ? "-" : sanitize(f.group), f.x_column, f.series, fmt_num(f.fit.exponent),
                     fmt_num(f.fit.intercept), fmt_num(f.fit.r2), std::to_string(f.fit.x.size())},
                    ',') +
               "\n";
    return out;
}

ResultTable run_experiment(const ExperimentConfig &cfg, const Progress &progress) {
    cfg.validate();
    const auto t0   = std::chrono::steady_clock::now();
    Plan       plan = make_plan(cfg);

    const int                                   total = static_cast<int>(plan.tasks.size());
    std::vector<std::vector<ResultRow>>         results(plan.tasks.size());
    std::atomic<int>                            next{0}, done{0};
    std::mutex                                  progress_mutex;
    auto worker = [&] {
        for(int i = next++; i < total; i = next++) {
            const Task            &t = plan.tasks[static_cast<size_t>(i)];
            std::vector<ResultRow> rows;
            try {
                const auto metrics = t.run(t.seed);
                for(size_t k = 0; k < t.row_params.size(); ++k) rows.push_back({t.row_params[k], t.seed, metrics[k], "ok"});
            } catch(const std::exception &e) {
                rows.clear();
                for(const auto &p : t.row_params)
                    rows.push_back({p, t.seed, std::vector<double>(plan.metrics.size(), kNaN), std::string("error: ") + e.what()});
            }
            results[static_cast<size_t>(i)] = std::move(rows);
            const int d                     = ++done;
            if(progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(d, total);
            }
        }
    };
    const int                nthreads = std::min(cfg.threads, std::max(total, 1));
    std::vector<std::thread> pool;
    for(int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
    worker();
    for(auto &th : pool) th.join();

    // deterministic order: by parameter point, then seed
    std::vector<std::pair<std::pair<int, std::uint64_t>, ResultRow>> tagged;
    for(size_t i = 0; i < plan.tasks.size(); ++i)
        for(size_t k = 0; k < results[i].size(); ++k)
            tagged.push_back({{plan.tasks[i].ordinals[k], plan.tasks[i].seed}, std::move(results[i][k])});
    std::stable_sort(tagged.begin(), tagged.end(), [](const auto &a, const auto &b) { return a.first < b.first; });

    ResultTable table;
    table.id            = cfg.id;
    table.param_columns = plan.param_columns;
    table.metrics       = plan.metrics;
    for(auto &t : tagged) table.rows.push_back(std::move(t.second));
    table.summary = summarize_rows(table.param_columns, table.metrics, table.rows);

    switch(cfg.id) {
        case ExperimentId::DeepQem:
        case ExperimentId::AlphaVsNq: table.fits = fit_table(table, "depth", {"parts"}, {"unmitigated", "mitigated"}); break;
        case ExperimentId::SizeScaling: table.fits = fit_table(table, "n_qubits", {}, {"unmitigated", "mitigated"}); break;
        default: break;
    }
    table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

std::vector<std::string> write_outputs(const ResultTable &table, const ExperimentConfig &cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string        id    = to_string(table.id);
    const std::string        stamp = timestamp();
    std::vector<std::string> files;
    auto write = [&](const std::string &name, const std::string &body, bool comment) {
        const fs::path p = fs::path(cfg.out_dir) / name;
        std::ofstream  os(p);
        if(!os) throw std::runtime_error("cannot write " + p.string());
        if(comment) os << "# " << id << " generated " << stamp << "\n";
        os << body;
        files.push_back(p.string());
    };
    write(id + ".csv", table.rows_csv(), true);
    write(id + "_summary.csv", table.summary_csv(), true);
    if(!table.fits.empty()) write(id + "_fits.csv", table.fits_csv(), true);

    nlohmann::json fits = nlohmann::json::array();
    for(const auto &f : table.fits) {
        nlohmann::json jf = {{"group", f.group},
                             {"series", f.series},
                             {"x_column", f.x_column},
                             {"exponent", f.fit.exponent},
                             {"intercept", f.fit.intercept}};
        if(f.series == "delta") jf["suppression_factor"] = std::pow(10.0, f.fit.intercept);
        else jf["r2"] = f.fit.r2;
        fits.push_back(std::move(jf));
    }
    nlohmann::json stats = nlohmann::json::object();
    for(const auto &m : table.metrics) stats[m.name] = to_string(m.stat);
    const nlohmann::json manifest = {{"experiment", id},
                                     {"figure_statistic", to_string(statistic_for(table.id))},
                                     {"metric_statistics", stats},
                                     {"config", cfg.to_json()},
                                     {"rows", table.rows.size()},
                                     {"failures", table.failures()},
                                     {"fits", fits},
                                     {"finished_at", stamp},
                                     {"wall_seconds", table.wall_seconds},
                                     {"files", files}};
    write(id + "_manifest.json", manifest.dump(2) + "\n", false);
    return files;
}

double check_summary_consistency(const std::string &rows_csv_path, const std::string &summary_csv_path) {
    auto read_lines = [](const std::string &path) {
        std::ifstream            is(path);
        if(!is) throw std::runtime_error("cannot read " + path);
        std::vector<std::string> lines;
        std::string              line;
        while(std::getline(is, line))
            if(!line.empty() && line[0] != '#') lines.push_back(line);
        if(lines.empty()) throw std::runtime_error("empty CSV " + path);
        return lines;
    };
    const auto rows_lines = read_lines(rows_csv_path);
    const auto sum_lines  = read_lines(summary_csv_path);
    const auto rh         = split(rows_lines[0], ',');
    const auto sh         = split(sum_lines[0], ',');

    const auto seed_col = std::find(rh.begin(), rh.end(), "seed") - rh.begin();
    const auto n_params = static_cast<size_t>(seed_col);
    const size_t n_metrics = rh.size() - n_params - 2;
    std::vector<Metric> metrics;
    for(size_t m = 0; m < n_metrics; ++m) {
        const std::string &name = rh[n_params + 1 + m];
        const std::string &col  = sh[n_params + 1 + 3 * m];
        metrics.push_back({name, col == name + "_gmean" ? Statistic::Geometric : Statistic::Arithmetic});
    }
    std::vector<ResultRow> rows;
    for(size_t i = 1; i < rows_lines.size(); ++i) {
        const auto cells = split(rows_lines[i], ',');
        ResultRow  r;
        r.params.assign(cells.begin(), cells.begin() + static_cast<long>(n_params));
        r.seed = std::stoull(cells[n_params]);
        for(size_t m = 0; m < n_metrics; ++m) r.metrics.push_back(std::stod(cells[n_params + 1 + m]));
        r.status = cells.back();
        rows.push_back(std::move(r));
    }
    const auto summary = summarize_rows({}, metrics, rows);
    double     worst   = 0.0;
    for(size_t i = 1; i < sum_lines.size(); ++i) {
        const auto cells = split(sum_lines[i], ',');
        const auto &s    = summary.at(i - 1);
        for(size_t m = 0; m < n_metrics; ++m) {
            const double vals[3] = {s.metrics[m].mean, s.metrics[m].spread, s.metrics[m].median};
            for(int k = 0; k < 3; ++k) {
                const double stored = std::stod(cells[n_params + 1 + 3 * m + static_cast<size_t>(k)]);
                if(std::isnan(stored) && std::isnan(vals[k])) continue;
                if(std::isnan(stored) != std::isnan(vals[k])) return std::numeric_limits<double>::infinity();
                const double scale = std::max({std::abs(stored), std::abs(vals[k]), 1e-300});
                worst              = std::max(worst, std::abs(stored - vals[k]) / scale);
            }
        }
    }
    return worst;
}

} // namespace qem::bench
