#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridshield::grid {

struct CaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BusType { Slack, Load, Gen };
enum class MeasKind { Flow, Injection, Voltage };

struct Bus {
    int id = 0;
    BusType type = BusType::Load;
    double base_load = 0.0;  // net per-unit load; negative means net generation
};

struct Branch {
    int from = 0;
    int to = 0;
    double x = 0.0;  // series reactance, per-unit
};

struct MeasurementDef {
    MeasKind kind = MeasKind::Flow;
    int from = -1;  // flows
    int to = -1;
    int bus = -1;        // injections / voltages
    int owner_bus = 0;   // from-bus for flows, the bus itself otherwise
    double sigma_rel = 0.01;
    std::string name() const;
};

/// Validated test case under the DC power-flow approximation.
///
/// States are the voltage angles of the non-slack buses (slack pinned to 0).
/// Flow and injection rows of the Jacobian carry 1/x sensitivities; voltage
/// magnitude rows observe a constant 1.0 p.u. profile, so they contribute a
/// baseline offset and a zero Jacobian row. The measurement covariance R is
/// fixed at load time from the base-load operating point, which keeps the
/// projection matrix and all derived bad-data quantities case-level constants.
class GridCase {
public:
    static constexpr double kSigmaFloor = 1e-3;  // p.u., avoids zero weights

    std::string id;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<MeasurementDef> measurements;

    int state_dim() const { return static_cast<int>(state_bus_.size()); }
    int meas_dim() const { return static_cast<int>(measurements.size()); }

    const Eigen::MatrixXd& jacobian() const { return h_; }
    /// Affine measurement offset: 1.0 on voltage rows, 0 elsewhere.
    const Eigen::VectorXd& baseline() const { return h0_; }
    /// h(x) evaluated at the base-load operating point.
    const Eigen::VectorXd& nominal_z() const { return nominal_z_; }
    /// Absolute measurement standard deviations sigma_rel * max(|nominal|, floor).
    const Eigen::VectorXd& sigmas() const { return sigma_; }
    const Eigen::VectorXd& r_inv_diag() const { return r_inv_; }

    /// Cached Cholesky factor of the WLS gain matrix H' R^-1 H.
    const Eigen::LLT<Eigen::MatrixXd>& gain_llt() const { return gain_llt_; }

    int bus_index(int id) const;        // position in `buses`
    int state_index(int bus_id) const;  // position in the angle vector, -1 for slack
    int slack_id() const { return slack_id_; }
    const std::vector<int>& state_bus_ids() const { return state_bus_; }

    /// Angles of non-slack buses for given net injections (p.u., state order).
    Eigen::VectorXd solve_angles(const Eigen::VectorXd& injections) const;
    /// h(x) = H x + h0.
    Eigen::VectorXd measure(const Eigen::VectorXd& angles) const;
    /// Net injection vector at base loads (state order, load factor 1).
    Eigen::VectorXd base_injections() const;

    /// Validates topology, builds H/R and the cached factorizations.
    /// Throws CaseError on duplicate ids, missing endpoints, multiple slack
    /// buses, rank-deficient H, or d <= N.
    void finalize();

private:
    Eigen::MatrixXd h_;
    Eigen::VectorXd h0_, nominal_z_, sigma_, r_inv_;
    Eigen::LLT<Eigen::MatrixXd> bprime_llt_;  // reduced susceptance matrix
    Eigen::LLT<Eigen::MatrixXd> gain_llt_;
    std::vector<int> state_bus_;  // bus id per state position
    int slack_id_ = -1;
};

GridCase load_case(const std::string& path);
GridCase parse_case(const std::string& json_text, const std::string& id);

struct LoadProfile {
    std::vector<double> shape;  // one multiplicative factor per sample of day
    double noise_sigma = 0.0;   // relative gaussian noise on each bus load
};

LoadProfile load_profile(const std::string& path);
/// Double-peaked diurnal curve: 1 + 0.3 sin(2 pi k/S - pi/2) + 0.1 sin(4 pi k/S).
LoadProfile default_profile(int samples_per_day);

struct DayStream {
    Eigen::MatrixXd z;       // samples x d, with measurement noise
    Eigen::MatrixXd z_true;  // samples x d, noiseless h(x_true)
};

/// Generates one day of measurements. Per sample: loads scaled by the profile
/// (periodic in the shape length) with relative load noise, DC solve for the
/// exact state, then per-measurement gaussian noise N(0, (sigma_rel*|h_i|)^2).
/// Draw order per sample: one gaussian per non-slack bus (bus order), then one
/// gaussian per measurement (measurement order).
DayStream simulate_day(const GridCase& c, const LoadProfile& profile, int samples,
                       std::uint64_t seed);

}  // namespace gridshield::grid
