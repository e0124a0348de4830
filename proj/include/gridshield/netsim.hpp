#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gridshield::net {

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// M/M/1 node parameters. Channel values are reported once per poll window.
struct QueueParams {
    double lambda = 12.5;       // packet arrival rate, packets/s
    double mu = 50.0;           // service rate, packets/s
    double poll_interval = 4.0; // seconds per measurement batch
    double td_cap_factor = 100.0;  // overload sojourn cap = factor / mu

    double utilization() const { return lambda / mu; }
    double td_cap() const { return td_cap_factor / mu; }
};

struct ChannelSample {
    double iat = 0.0;  // window mean inter-arrival time, s
    double td = 0.0;   // window mean sojourn time, s
    double pc = 0.0;   // window packet count
    bool overloaded = false;
};

/// Steady-state mean sojourn at an effective arrival rate, saturating at the
/// overload cap once lambda_eff reaches mu. Strictly increasing below the cap.
double expected_td(const QueueParams& q, double lambda_eff);

/// One channel triple per poll window. The window's packet count is
/// Poisson(lambda T); IAT is the mean of that many exponential(lambda)
/// inter-arrivals and TD the mean of that many exponential(mu-lambda) sojourn
/// draws (an empty window falls back to a single draw, the time-to-next
/// estimate), so E[IAT] = 1/lambda and E[TD] = 1/(mu-lambda) exactly.
/// Throws NetError unless lambda < mu.
std::vector<ChannelSample> gen_normal_channels(const QueueParams& q, int samples,
                                               std::uint64_t seed);

/// FARIMA(p, d, q) series parameters. Stationarity requires |d| < 1/2 and all
/// AR characteristic roots inside the unit circle. The Hurst exponent of the
/// generated series is d + 1/2 by construction.
struct FarimaParams {
    double d_frac = 0.0;
    std::vector<double> ar;  // phi_j
    std::vector<double> ma;  // psi_j
    double innovation_sigma = 1.0;

    struct Igarch {
        double w = 1e-4;
        std::vector<double> phi;  // weights on lagged eps^2
        std::vector<double> psi;  // weights on lagged sigma^2
    };
    std::optional<Igarch> igarch;
};

/// Generates a FARIMA series: white noise -> MA filter -> AR recursion ->
/// fractional integration by the truncated binomial expansion of (1-B)^-d
/// (1000 lags kept; an equal burn-in prefix is generated and dropped). With
/// igarch present the innovations are scaled by the conditional sigma_t from
/// sigma_t^2 = w + sum phi_j eps_{t-j}^2 + sum psi_j sigma_{t-j}^2.
std::vector<double> farima_generate(const FarimaParams& f, int length,
                                    std::uint64_t seed);

struct GpdParams {
    double xi = 0.0;          // shape
    double sigma_scale = 1.0; // scale, > 0
    double threshold_u = 0.0; // exceedance threshold
};

/// Survival function (1 + xi x/sigma)^(-1/xi), or exp(-x/sigma) at xi = 0.
/// Throws NetError for x outside the support.
double gpd_survival(const GpdParams& g, double x);

/// Inverse-transform sampling of the excess distribution (threshold excluded).
std::vector<double> gpd_sample(const GpdParams& g, int n, std::uint64_t seed);

enum class TrafficKind { RateScale, Farima, GpdExtremes };

/// Attack-traffic model applied to a victim's arrival process. The modulation
/// scales with (severity - 1) so severity 1 reproduces normal traffic
/// bit-for-bit under the same seed:
///   rate_scale:   lambda' = severity * lambda
///   farima:       lambda' = lambda (1 + (severity-1) * normalized series),
///                 clipped below at 0.1 lambda
///   gpd_extremes: lambda' = lambda + (severity-1)(threshold_u + GPD draw)
struct AttackTrafficModel {
    TrafficKind kind = TrafficKind::RateScale;
    double severity = 2.0;
    std::optional<FarimaParams> farima;
    std::optional<GpdParams> gpd;
};

/// Channels under attack traffic. Windows whose effective rate reaches mu are
/// reported at the sojourn cap with the overload flag set (a flooded victim,
/// not an error). The channel draw stream is seeded exactly as in
/// gen_normal_channels; rate-series draws use a derived sub-stream.
std::vector<ChannelSample> gen_attacked_channels(const QueueParams& q,
                                                 const AttackTrafficModel& model,
                                                 int samples, std::uint64_t seed);

}  // namespace gridshield::net
