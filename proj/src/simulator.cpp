#include "asyougo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace asyougo {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t key(std::uint64_t seed, std::uint64_t run, long a, long b) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ run);
    h = splitmix(h ^ static_cast<std::uint64_t>(a));
    return splitmix(h ^ static_cast<std::uint64_t>(b));
}

constexpr double kTwo53 = 1.0 / 9007199254740992.0;

struct Walk {
    const AnyPolicy& policy;
    const Model& model;
    const ShadowingPmf& pmf;
    std::uint64_t seed, run;
    DeploymentTrace trace;
    long last = 0;
    double gmax = 0.0;

    double measure(long at) {
        const double w = sample_shadowing(pmf, seed, run, last, at);
        trace.measurements.push_back({last, at, w});
        return w;
    }

    void add_link(long tx, double w, std::size_t j, bool source) {
        const auto& dep = model.dep;
        LinkRecord l;
        l.tx = tx;
        l.rx = last;
        l.w = w;
        l.power_index = j;
        l.gamma = dep.powers[j];
        l.outage = outage_probability(model.channel, static_cast<int>(tx - last), dep.delta_m, l.gamma, w);
        l.source = source;
        trace.links.push_back(l);
        gmax = std::max(gmax, l.gamma);
        if (!source) last = tx;
    }

    void place_source(long L) {
        const auto& dep = model.dep;
        const int r = static_cast<int>(L - last);
        const double w = measure(L);
        std::size_t j;
        if (is_max_power(policy)) j = last_hop_max_power(model, r, w, gmax).index;
        else j = min_power_cost(model.channel, r, dep.delta_m, w, dep.powers, dep.xi_o).index;
        add_link(L, w, j, true);
        trace.source_position = L;
    }

    // one placement decision; false once the source is placed or the horizon hit
    bool step(long L, long horizon) {
        const auto& dep = model.dep;
        const int AB = dep.A + dep.B;
        if (L < 0 && last + AB > horizon) return false;
        if (!uses_backtracking(policy)) {
            for (int r = 1; r <= AB; ++r) {
                const long pos = last + r;
                if (pos == L) {
                    place_source(L);
                    return false;
                }
                if (r <= dep.A) continue;
                const double w = measure(pos);
                const auto d = std::holds_alternative<GeoSumPolicy>(policy)
                                   ? decide_geo(std::get<GeoSumPolicy>(policy), r, w)
                                   : decide_geo(std::get<GeoMaxPolicy>(policy), r, w, gmax);
                if (d.place) {
                    add_link(pos, w, d.power_index, false);
                    return true;
                }
            }
            throw std::logic_error("walk passed the window without placing");
        }
        std::vector<double> w_vec;
        w_vec.reserve(static_cast<std::size_t>(dep.B));
        for (int r = 1; r <= AB; ++r) {
            const long pos = last + r;
            if (pos == L) {
                place_source(L);
                return false;
            }
            if (r > dep.A) w_vec.push_back(measure(pos));
        }
        int u = 0;
        std::size_t j = 0;
        std::visit(
            [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, BtSumPolicy>) {
                    const auto d = decide_bt(p, w_vec);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, BtMaxPolicy>) {
                    const auto d = decide_bt(p, w_vec, gmax);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, AvgPolicy>) {
                    const auto d = decide_avg(p, w_vec);
                    u = d.u, j = d.power_index;
                } else if constexpr (std::is_same_v<P, HeuristicPolicy>) {
                    const auto d = heuristic_decide(w_vec, p.model.channel, p.model.dep);
                    u = d.u, j = d.power_index;
                }
            },
            policy);
        add_link(last + u, w_vec[static_cast<std::size_t>(u - dep.A - 1)], j, false);
        return true;
    }
};

struct RunSummary {
    double cost = 0, cost_sum = 0, cost_max = 0;
    int relays = 0;
    long links = 0;
    double power = 0, hops = 0, outage = 0;
    // infinite line
    std::vector<double> cycle_cost, cycle_len;
};

void add_links(RunSummary& s, const DeploymentTrace& t, bool relay_only) {
    for (const auto& l : t.links) {
        if (relay_only && l.source) continue;
        ++s.links;
        s.power += l.gamma;
        s.hops += static_cast<double>(l.tx - l.rx);
        s.outage += l.outage;
    }
}

}  // namespace

double sample_shadowing(const ShadowingPmf& pmf, std::uint64_t seed, std::uint64_t run, long from, long at) {
    const double u = static_cast<double>(key(seed, run, from, at) >> 11) * kTwo53;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pmf.size(); ++i) {
        acc += pmf.probs[i];
        if (u < acc) return pmf.support[i];
    }
    return pmf.support.back();
}

long sample_line_length(const LineModel& line, std::uint64_t seed, std::uint64_t run) {
    switch (line.kind) {
        case LineKind::fixed:
            return line.length;
        case LineKind::infinite:
            return -1;
        case LineKind::geometric: {
            const double u = static_cast<double>((key(seed, run, -1, -1) >> 11) + 1) * kTwo53;  // (0,1]
            return 1 + static_cast<long>(std::floor(std::log(u) / std::log1p(-line.theta)));
        }
    }
    return -1;
}

TraceTotals compute_totals(const std::vector<LinkRecord>& links, const DeploymentParams& dep) {
    TraceTotals t;
    for (const auto& l : links) {
        t.sum_power += l.gamma;
        t.max_power = std::max(t.max_power, l.gamma);
        t.sum_outage += l.outage;
        if (!l.source) ++t.relay_count;
    }
    t.cost_sum = t.sum_power + dep.xi_o * t.sum_outage + dep.xi_r * t.relay_count;
    t.cost_max = t.max_power + dep.xi_o * t.sum_outage + dep.xi_r * t.relay_count;
    return t;
}

DeploymentTrace simulate_run(const AnyPolicy& policy, const LineModel& line, const ShadowingPmf& pmf,
                             std::uint64_t seed, std::uint64_t run) {
    const Model& model = model_of(policy);
    const bool infinite = line.kind == LineKind::infinite;
    if (is_infinite_line(policy) != infinite)
        throw std::invalid_argument(infinite ? "an infinite line needs an average-cost or heuristic policy"
                                             : "average-cost policies need an infinite line");
    if (infinite && line.horizon < model.dep.A + model.dep.B)
        throw std::invalid_argument("horizon shorter than one window");
    if (line.kind == LineKind::fixed && line.length < 1) throw std::invalid_argument("line length must be >= 1");
    if (line.kind == LineKind::geometric && !(line.theta > 0 && line.theta < 1))
        throw std::invalid_argument("theta must lie in (0,1)");

    Walk walk{policy, model, pmf, seed, run, {}};
    const long L = sample_line_length(line, seed, run);
    walk.trace.line_length = L;
    while (walk.step(L, line.horizon)) {
    }
    walk.trace.steps_covered = walk.last;
    walk.trace.totals = compute_totals(walk.trace.links, model.dep);
    return walk.trace;
}

SimulationResult simulate(const AnyPolicy& policy, const LineModel& line, const ShadowingPmf& pmf,
                          const SimulateOptions& opts) {
    if (opts.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    pmf.validate();
    const Model& model = model_of(policy);
    const bool max_obj = is_max_power(policy);
    const auto n = static_cast<std::size_t>(opts.n_runs);

    std::vector<RunSummary> sums(n);
    SimulationResult res;
    if (opts.keep_traces) res.traces.resize(n);

    unsigned threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned t) {
        try {
            for (std::size_t k = t; k < n; k += threads) {
                auto tr = simulate_run(policy, line, pmf, opts.seed, k);
                auto& s = sums[k];
                s.cost_sum = tr.totals.cost_sum;
                s.cost_max = tr.totals.cost_max;
                s.cost = max_obj ? s.cost_max : s.cost_sum;
                s.relays = tr.totals.relay_count;
                add_links(s, tr, opts.relay_links_only);
                if (line.kind == LineKind::infinite) {
                    for (const auto& l : tr.links) {
                        s.cycle_cost.push_back(model.dep.xi_r + l.gamma + model.dep.xi_o * l.outage);
                        s.cycle_len.push_back(static_cast<double>(l.tx - l.rx));
                    }
                }
                if (opts.keep_traces) res.traces[k] = std::move(tr);
            }
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    auto& st = res.stats;
    st.n_runs = opts.n_runs;
    st.relay_links_only = opts.relay_links_only;
    double c = 0, c2 = 0, cs = 0, cs2 = 0, cm = 0, cm2 = 0, relays = 0;
    double power = 0, hops = 0, outage = 0;
    for (const auto& s : sums) {
        c += s.cost, c2 += s.cost * s.cost;
        cs += s.cost_sum, cs2 += s.cost_sum * s.cost_sum;
        cm += s.cost_max, cm2 += s.cost_max * s.cost_max;
        relays += s.relays;
        st.n_links += s.links;
        power += s.power, hops += s.hops, outage += s.outage;
        res.run_costs.push_back(s.cost);
    }
    const double nn = static_cast<double>(n);
    auto se = [&](double s1, double s2) {
        if (n < 2) return 0.0;
        const double var = std::max(0.0, (s2 - s1 * s1 / nn) / (nn - 1));
        return std::sqrt(var / nn);
    };
    st.mean_cost = c / nn;
    st.cost_std_error = se(c, c2);
    st.mean_cost_sum = cs / nn;
    st.cost_sum_half_width = 1.96 * se(cs, cs2);
    st.mean_cost_max = cm / nn;
    st.cost_max_half_width = 1.96 * se(cm, cm2);
    st.mean_relays = relays / nn;
    if (st.n_links > 0) {
        const double nl = static_cast<double>(st.n_links);
        st.mean_power_per_link = power / nl;
        st.mean_hop_length = hops / nl;
        st.mean_outage_per_link = outage / nl;
    }

    if (line.kind == LineKind::infinite) {
        double C = 0, U = 0;
        long m = 0;
        for (const auto& s : sums)
            for (std::size_t i = 0; i < s.cycle_cost.size(); ++i) C += s.cycle_cost[i], U += s.cycle_len[i], ++m;
        st.n_cycles = m;
        if (m > 0) {
            const double lam = C / U;
            st.cost_per_step = lam;
            if (m > 1) {
                double d2 = 0;
                for (const auto& s : sums)
                    for (std::size_t i = 0; i < s.cycle_cost.size(); ++i) {
                        const double d = s.cycle_cost[i] - lam * s.cycle_len[i];
                        d2 += d * d;
                    }
                const double mm = static_cast<double>(m);
                const double ubar = U / mm;
                st.cost_per_step_std_error = std::sqrt(d2 / (mm - 1) / mm) / ubar;
            }
        }
    }
    return res;
}

DeploymentStats cost_breakdown(const std::vector<DeploymentTrace>& traces, bool relay_links_only) {
    if (traces.empty()) throw std::invalid_argument("cost_breakdown: no traces");
    DeploymentStats st;
    st.n_runs = static_cast<int>(traces.size());
    st.relay_links_only = relay_links_only;
    RunSummary acc;
    double cs = 0, cm = 0, rel = 0;
    for (const auto& t : traces) {
        add_links(acc, t, relay_links_only);
        cs += t.totals.cost_sum;
        cm += t.totals.cost_max;
        rel += t.totals.relay_count;
    }
    const double n = static_cast<double>(traces.size());
    st.mean_cost_sum = cs / n;
    st.mean_cost_max = cm / n;
    st.mean_relays = rel / n;
    st.n_links = acc.links;
    if (acc.links > 0) {
        const double nl = static_cast<double>(acc.links);
        st.mean_power_per_link = acc.power / nl;
        st.mean_hop_length = acc.hops / nl;
        st.mean_outage_per_link = acc.outage / nl;
    }
    return st;
}

std::string traces_to_csv(const std::vector<DeploymentTrace>& traces) {
    std::ostringstream out;
    out.precision(17);
    out << "run,tx,rx,w,gamma_mw,outage,source\n";
    for (std::size_t k = 0; k < traces.size(); ++k)
        for (const auto& l : traces[k].links)
            out << k << ',' << l.tx << ',' << l.rx << ',' << l.w << ',' << l.gamma << ',' << l.outage << ','
                << (l.source ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace asyougo
