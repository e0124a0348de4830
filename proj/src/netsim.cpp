#include "gridshield/netsim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "gridshield/rng.hpp"

namespace gridshield::net {

double expected_td(const QueueParams& q, double lambda_eff) {
    if (lambda_eff >= q.mu) return q.td_cap();
    return std::min(1.0 / (q.mu - lambda_eff), q.td_cap());
}

namespace {

ChannelSample draw_window(Rng& rng, const QueueParams& q, double lambda_eff) {
    ChannelSample s;
    const long n = rng.poisson(lambda_eff * q.poll_interval);
    s.pc = static_cast<double>(n);
    const long m = std::max<long>(n, 1);
    double acc = 0.0;
    for (long i = 0; i < m; ++i) acc += rng.exponential(lambda_eff);
    s.iat = acc / static_cast<double>(m);
    if (lambda_eff >= q.mu) {
        s.td = q.td_cap();
        s.overloaded = true;
    } else {
        const double rate = q.mu - lambda_eff;
        acc = 0.0;
        for (long i = 0; i < m; ++i) acc += rng.exponential(rate);
        s.td = std::min(acc / static_cast<double>(m), q.td_cap());
    }
    return s;
}

void validate(const QueueParams& q) {
    if (q.lambda <= 0.0 || q.mu <= 0.0 || q.poll_interval <= 0.0)
        throw NetError("queue rates and poll interval must be positive");
}

}  // namespace

std::vector<ChannelSample> gen_normal_channels(const QueueParams& q, int samples,
                                               std::uint64_t seed) {
    validate(q);
    if (q.lambda >= q.mu)
        throw NetError("unstable queue: lambda >= mu");
    std::vector<ChannelSample> out;
    out.reserve(samples);
    Rng rng(seed);
    for (int k = 0; k < samples; ++k) out.push_back(draw_window(rng, q, q.lambda));
    return out;
}

namespace {

// Characteristic roots of the AR polynomial via the companion matrix.
void check_stationary(const std::vector<double>& ar) {
    if (ar.empty()) return;
    const int p = static_cast<int>(ar.size());
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) comp(0, j) = ar[j];
    for (int i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
    const auto eig = comp.eigenvalues();
    for (Eigen::Index i = 0; i < eig.size(); ++i)
        if (std::abs(eig(i)) >= 1.0 - 1e-9)
            throw NetError("non-stationary AR polynomial");
}

}  // namespace

std::vector<double> farima_generate(const FarimaParams& f, int length,
                                    std::uint64_t seed) {
    if (std::abs(f.d_frac) >= 0.5)
        throw NetError("fractional differencing parameter must satisfy |d| < 1/2");
    check_stationary(f.ar);
    if (f.innovation_sigma <= 0.0) throw NetError("innovation sigma must be positive");

    constexpr int kFracLags = 1000;  // truncation of the (1-B)^-d expansion
    const int total = length + kFracLags;
    Rng rng(seed);

    // Innovations, optionally IGARCH-scaled.
    std::vector<double> eps(total);
    if (f.igarch) {
        const auto& g = *f.igarch;
        const int pg = static_cast<int>(g.phi.size());
        const int qg = static_cast<int>(g.psi.size());
        std::vector<double> sig2(total, f.innovation_sigma * f.innovation_sigma);
        for (int t = 0; t < total; ++t) {
            double s2 = g.w;
            for (int j = 0; j < pg; ++j)
                s2 += g.phi[j] * (t - 1 - j >= 0 ? eps[t - 1 - j] * eps[t - 1 - j]
                                                 : f.innovation_sigma * f.innovation_sigma);
            for (int j = 0; j < qg; ++j)
                s2 += g.psi[j] * (t - 1 - j >= 0 ? sig2[t - 1 - j]
                                                 : f.innovation_sigma * f.innovation_sigma);
            sig2[t] = s2;
            eps[t] = std::sqrt(std::max(s2, 0.0)) * rng.gaussian();
        }
    } else {
        for (int t = 0; t < total; ++t) eps[t] = f.innovation_sigma * rng.gaussian();
    }

    // MA then AR filters.
    const int qo = static_cast<int>(f.ma.size());
    const int po = static_cast<int>(f.ar.size());
    std::vector<double> u(total);
    for (int t = 0; t < total; ++t) {
        double v = eps[t];
        for (int j = 0; j < qo; ++j)
            if (t - 1 - j >= 0) v += f.ma[j] * eps[t - 1 - j];
        for (int j = 0; j < po; ++j)
            if (t - 1 - j >= 0) v += f.ar[j] * u[t - 1 - j];
        u[t] = v;
    }

    if (f.d_frac == 0.0)
        return std::vector<double>(u.begin() + kFracLags, u.end());

    // Fractional integration: x_t = sum_k c_k u_{t-k}, c_k from (1-B)^-d.
    std::vector<double> coef(kFracLags + 1);
    coef[0] = 1.0;
    for (int k = 1; k <= kFracLags; ++k)
        coef[k] = coef[k - 1] * (k - 1 + f.d_frac) / k;

    std::vector<double> x(length);
    for (int t = 0; t < length; ++t) {
        const int src = t + kFracLags;
        double acc = 0.0;
        const int kmax = std::min(src, kFracLags);
        for (int k = 0; k <= kmax; ++k) acc += coef[k] * u[src - k];
        x[t] = acc;
    }
    return x;
}

double gpd_survival(const GpdParams& g, double x) {
    if (g.sigma_scale <= 0.0) throw NetError("GPD scale must be positive");
    if (x < 0.0) throw NetError("GPD excess must be non-negative");
    if (g.xi == 0.0) return std::exp(-x / g.sigma_scale);
    if (g.xi < 0.0 && x > -g.sigma_scale / g.xi)
        throw NetError("x outside GPD support for negative shape");
    return std::pow(1.0 + g.xi * x / g.sigma_scale, -1.0 / g.xi);
}

std::vector<double> gpd_sample(const GpdParams& g, int n, std::uint64_t seed) {
    if (g.sigma_scale <= 0.0) throw NetError("GPD scale must be positive");
    std::vector<double> out(n);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const double s = 1.0 - rng.uniform();  // (0, 1]
        if (g.xi == 0.0)
            out[i] = -g.sigma_scale * std::log(s);
        else
            out[i] = g.sigma_scale * (std::pow(s, -g.xi) - 1.0) / g.xi;
    }
    return out;
}

std::vector<ChannelSample> gen_attacked_channels(const QueueParams& q,
                                                 const AttackTrafficModel& model,
                                                 int samples, std::uint64_t seed) {
    validate(q);
    if (model.severity < 1.0) throw NetError("severity must be >= 1");

    std::vector<double> lam(samples, q.lambda);
    switch (model.kind) {
        case TrafficKind::RateScale:
            for (double& l : lam) l = model.severity * q.lambda;
            break;
        case TrafficKind::Farima: {
            if (!model.farima) throw NetError("farima model requires farima params");
            std::vector<double> x =
                farima_generate(*model.farima, samples, derive_seed(seed, "farima-rate"));
            double mean = 0.0;
            for (double v : x) mean += v;
            mean /= std::max<std::size_t>(x.size(), 1);
            double var = 0.0;
            for (double v : x) var += (v - mean) * (v - mean);
            var /= std::max<std::size_t>(x.size(), 1);
            const double sd = std::sqrt(var);
            const double amp = model.severity - 1.0;
            for (int t = 0; t < samples; ++t) {
                const double norm = sd > 0.0 ? (x[t] - mean) / sd : 0.0;
                lam[t] = std::max(q.lambda * (1.0 + amp * norm), 0.1 * q.lambda);
            }
            break;
        }
        case TrafficKind::GpdExtremes: {
            if (!model.gpd) throw NetError("gpd model requires gpd params");
            const std::vector<double> spikes =
                gpd_sample(*model.gpd, samples, derive_seed(seed, "gpd-rate"));
            const double amp = model.severity - 1.0;
            for (int t = 0; t < samples; ++t)
                lam[t] = q.lambda + amp * (model.gpd->threshold_u + spikes[t]);
            break;
        }
    }

    std::vector<ChannelSample> out;
    out.reserve(samples);
    Rng rng(seed);  // same stream position as the normal generator
    for (int t = 0; t < samples; ++t) out.push_back(draw_window(rng, q, lam[t]));
    return out;
}

}  // namespace gridshield::net
