#include "asyougo/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace asyougo {

void ChannelParams::validate() const {
    if (!(eta > 0)) throw std::invalid_argument("channel: eta must be positive");
    if (!(c > 0)) throw std::invalid_argument("channel: c must be positive");
    if (!(r0 > 0)) throw std::invalid_argument("channel: r0 must be positive");
    if (!(p_rcv_min > 0)) throw std::invalid_argument("channel: p_rcv_min must be positive");
    if (!(sigma_db >= 0)) throw std::invalid_argument("channel: sigma_db must be non-negative");
    if (fading != "exponential")
        throw std::invalid_argument("channel: unsupported fading law '" + fading + "'");
}

void ShadowingPmf::validate() const {
    if (support.empty() || support.size() != probs.size())
        throw std::invalid_argument("shadowing pmf: support/probs size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!(support[i] > 0)) throw std::invalid_argument("shadowing pmf: support must be positive");
        if (i > 0 && !(support[i] > support[i - 1]))
            throw std::invalid_argument("shadowing pmf: support must be strictly increasing");
        if (!(probs[i] >= 0)) throw std::invalid_argument("shadowing pmf: negative probability");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("shadowing pmf: probabilities do not sum to one");
}

void DeploymentParams::validate() const {
    if (!(delta_m > 0)) throw std::invalid_argument("deployment: delta_m must be positive");
    if (A < 0) throw std::invalid_argument("deployment: A must be >= 0");
    if (B < 1) throw std::invalid_argument("deployment: B must be >= 1");
    if (powers.empty()) throw std::invalid_argument("deployment: power set is empty");
    for (std::size_t j = 0; j < powers.size(); ++j) {
        if (!(powers[j] > 0)) throw std::invalid_argument("deployment: powers must be positive");
        if (j > 0 && !(powers[j] > powers[j - 1]))
            throw std::invalid_argument("deployment: powers must be strictly ascending");
    }
    if (!(theta >= 0 && theta < 1)) throw std::invalid_argument("deployment: theta must be in [0,1)");
    if (!(xi_r >= 0)) throw std::invalid_argument("deployment: xi_r must be >= 0");
    if (!(xi_o >= 0)) throw std::invalid_argument("deployment: xi_o must be >= 0");
}

ShadowingPmf Model::pmf() const {
    return quantize_shadowing(channel.sigma_db, grid.step_db, grid.range_mult);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

ShadowingPmf quantize_shadowing(double sigma_db, double step_db, double range_mult) {
    if (!(step_db > 0)) throw std::invalid_argument("quantize_shadowing: step must be positive");
    if (!(range_mult > 0)) throw std::invalid_argument("quantize_shadowing: range must be positive");
    if (!(sigma_db >= 0)) throw std::invalid_argument("quantize_shadowing: sigma must be >= 0");

    ShadowingPmf pmf;
    if (sigma_db == 0.0) {
        pmf.support = {1.0};
        pmf.probs = {1.0};
        pmf.support_db = {0.0};
        return pmf;
    }
    // Half-width in grid steps; the small epsilon absorbs representation error
    // in e.g. 4*7/0.02.
    const auto half = static_cast<long>(std::floor(range_mult * sigma_db / step_db + 1e-9));
    const std::size_t n = static_cast<std::size_t>(2 * half + 1);
    pmf.support.resize(n);
    pmf.probs.resize(n);
    pmf.support_db.resize(n);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = static_cast<double>(static_cast<long>(i) - half) * step_db;
        pmf.support_db[i] = y;
        pmf.support[i] = std::pow(10.0, y / 10.0);
        pmf.probs[i] = std::exp(-0.5 * (y / sigma_db) * (y / sigma_db));
        total += pmf.probs[i];
    }
    for (std::size_t i = 0; i < n; ++i) pmf.probs[i] /= total;
    return pmf;
}

double outage_probability(const ChannelParams& ch, int r_steps, double delta_m, double gamma,
                          double w) {
    if (r_steps < 1) throw std::invalid_argument("outage_probability: r_steps must be >= 1");
    if (!(gamma > 0)) throw std::invalid_argument("outage_probability: gamma must be positive");
    if (!(w > 0)) throw std::invalid_argument("outage_probability: w must be positive");
    const double dist = static_cast<double>(r_steps) * delta_m / ch.r0;
    const double x = ch.p_rcv_min * std::pow(dist, ch.eta) / (gamma * ch.c * w);
    return -std::expm1(-x);
}

PowerChoice min_power_cost(const ChannelParams& ch, int r_steps, double delta_m, double w,
                           std::span<const double> powers, double xi_o) {
    if (powers.empty()) throw std::invalid_argument("min_power_cost: empty power set");
    PowerChoice best;
    for (std::size_t j = 0; j < powers.size(); ++j) {
        const double cost = powers[j] + xi_o * outage_probability(ch, r_steps, delta_m, powers[j], w);
        if (j == 0 || cost < best.cost) best = {j, powers[j], cost};
    }
    return best;
}

LinkTables LinkTables::build(const ChannelParams& ch, const DeploymentParams& dep,
                             const ShadowingPmf& pmf, int max_r) {
    LinkTables t;
    t.max_r = max_r;
    t.n_w = pmf.size();
    t.n_p = dep.powers.size();
    t.outage.assign(static_cast<std::size_t>(max_r) + 1, {});
    t.best.assign(static_cast<std::size_t>(max_r) + 1, {});
    for (int r = 1; r <= max_r; ++r) {
        auto& out_r = t.outage[r];
        out_r.assign(t.n_p, std::vector<double>(t.n_w));
        for (std::size_t j = 0; j < t.n_p; ++j)
            for (std::size_t i = 0; i < t.n_w; ++i)
                out_r[j][i] = outage_probability(ch, r, dep.delta_m, dep.powers[j], pmf.support[i]);
        auto& best_r = t.best[r];
        best_r.resize(t.n_w);
        for (std::size_t i = 0; i < t.n_w; ++i)
            best_r[i] = min_power_cost(ch, r, dep.delta_m, pmf.support[i], dep.powers, dep.xi_o);
    }
    return t;
}

double expected_last_hop(const LinkTables& t, const ShadowingPmf& pmf, int r) {
    double e = 0.0;
    for (std::size_t i = 0; i < t.n_w; ++i) e += pmf.probs[i] * t.best[r][i].cost;
    return e;
}

double shadowing_from_rssi(const ChannelParams& ch, int r_steps, double delta_m,
                           double rssi_dbm, double probe_power_dbm) {
    if (r_steps < 1) throw std::invalid_argument("shadowing_from_rssi: r_steps must be >= 1");
    const double dist = static_cast<double>(r_steps) * delta_m / ch.r0;
    const double mean_gain = ch.c * std::pow(dist, -ch.eta);
    const double w = dbm_to_mw(rssi_dbm) / (dbm_to_mw(probe_power_dbm) * mean_gain);
    if (!(w > 0) || !std::isfinite(w))
        throw std::invalid_argument("shadowing_from_rssi: recovered w is not positive");
    return w;
}

}  // namespace asyougo
