#include "gridshield/grid.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gridshield/rng.hpp"

namespace gridshield::grid {

using nlohmann::json;

std::string MeasurementDef::name() const {
    switch (kind) {
        case MeasKind::Flow:
            return "flow(" + std::to_string(from) + "," + std::to_string(to) + ")";
        case MeasKind::Injection:
            return "inj(" + std::to_string(bus) + ")";
        case MeasKind::Voltage:
            return "volt(" + std::to_string(bus) + ")";
    }
    return "?";
}

int GridCase::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

int GridCase::state_index(int bus_id) const {
    for (std::size_t i = 0; i < state_bus_.size(); ++i)
        if (state_bus_[i] == bus_id) return static_cast<int>(i);
    return -1;
}

void GridCase::finalize() {
    std::set<int> seen;
    slack_id_ = -1;
    for (const Bus& b : buses) {
        if (!seen.insert(b.id).second)
            throw CaseError("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::Slack) {
            if (slack_id_ != -1) throw CaseError("more than one slack bus");
            slack_id_ = b.id;
        }
    }
    if (slack_id_ == -1) throw CaseError("no slack bus");

    state_bus_.clear();
    for (const Bus& b : buses)
        if (b.id != slack_id_) state_bus_.push_back(b.id);

    for (const Branch& br : branches) {
        if (bus_index(br.from) < 0 || bus_index(br.to) < 0)
            throw CaseError("branch (" + std::to_string(br.from) + "," +
                            std::to_string(br.to) + ") references unknown bus");
        if (br.x <= 0.0) throw CaseError("branch reactance must be positive");
    }

    const int n = state_dim();
    const int d = meas_dim();
    if (d <= n)
        throw CaseError("case must be overdetermined: d=" + std::to_string(d) +
                        " N=" + std::to_string(n));

    // Jacobian. Flow (i,j): (theta_i - theta_j)/x. Injection: sum of flows
    // leaving the bus. Voltage rows observe the constant 1.0 profile only.
    h_ = Eigen::MatrixXd::Zero(d, n);
    h0_ = Eigen::VectorXd::Zero(d);
    auto add_pair = [&](int row, int bus_i, int bus_j, double w) {
        const int si = state_index(bus_i);
        const int sj = state_index(bus_j);
        if (si >= 0) h_(row, si) += w;
        if (sj >= 0) h_(row, sj) -= w;
    };
    auto branch_x = [&](int from, int to) -> double {
        for (const Branch& br : branches)
            if ((br.from == from && br.to == to) || (br.from == to && br.to == from))
                return br.x;
        throw CaseError("flow measurement on missing branch (" + std::to_string(from) +
                        "," + std::to_string(to) + ")");
    };
    for (int r = 0; r < d; ++r) {
        MeasurementDef& m = measurements[r];
        if (m.sigma_rel <= 0.0)
            throw CaseError("sigma must be positive on measurement " + m.name());
        switch (m.kind) {
            case MeasKind::Flow: {
                if (bus_index(m.from) < 0 || bus_index(m.to) < 0)
                    throw CaseError("flow measurement references unknown bus");
                add_pair(r, m.from, m.to, 1.0 / branch_x(m.from, m.to));
                m.owner_bus = m.from;
                break;
            }
            case MeasKind::Injection: {
                if (bus_index(m.bus) < 0)
                    throw CaseError("injection measurement references unknown bus");
                for (const Branch& br : branches) {
                    if (br.from == m.bus) add_pair(r, br.from, br.to, 1.0 / br.x);
                    if (br.to == m.bus) add_pair(r, br.to, br.from, 1.0 / br.x);
                }
                m.owner_bus = m.bus;
                break;
            }
            case MeasKind::Voltage: {
                if (bus_index(m.bus) < 0)
                    throw CaseError("voltage measurement references unknown bus");
                h0_(r) = 1.0;
                m.owner_bus = m.bus;
                break;
            }
        }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(h_);
    if (lu.rank() < n)
        throw CaseError("system unobservable: rank(H)=" + std::to_string(lu.rank()) +
                        " < N=" + std::to_string(n));

    // Reduced susceptance matrix for the DC solve.
    Eigen::MatrixXd bprime = Eigen::MatrixXd::Zero(n, n);
    for (const Branch& br : branches) {
        const int si = state_index(br.from);
        const int sj = state_index(br.to);
        const double w = 1.0 / br.x;
        if (si >= 0) bprime(si, si) += w;
        if (sj >= 0) bprime(sj, sj) += w;
        if (si >= 0 && sj >= 0) {
            bprime(si, sj) -= w;
            bprime(sj, si) -= w;
        }
    }
    bprime_llt_.compute(bprime);
    if (bprime_llt_.info() != Eigen::Success)
        throw CaseError("singular susceptance matrix (islanded bus?)");

    // Nominal operating point fixes R, hence the projection matrix, the
    // innovation indices and the chi-squared weights for the whole case.
    nominal_z_ = measure(solve_angles(base_injections()));
    sigma_.resize(d);
    r_inv_.resize(d);
    for (int r = 0; r < d; ++r) {
        sigma_(r) = measurements[r].sigma_rel *
                    std::max(std::abs(nominal_z_(r)), kSigmaFloor);
        r_inv_(r) = 1.0 / (sigma_(r) * sigma_(r));
    }

    const Eigen::MatrixXd gain = h_.transpose() * r_inv_.asDiagonal() * h_;
    gain_llt_.compute(gain);
    if (gain_llt_.info() != Eigen::Success)
        throw CaseError("singular gain matrix");
}

Eigen::VectorXd GridCase::solve_angles(const Eigen::VectorXd& injections) const {
    return bprime_llt_.solve(injections);
}

Eigen::VectorXd GridCase::measure(const Eigen::VectorXd& angles) const {
    return h_ * angles + h0_;
}

Eigen::VectorXd GridCase::base_injections() const {
    Eigen::VectorXd p(state_dim());
    for (int i = 0; i < state_dim(); ++i)
        p(i) = -buses[bus_index(state_bus_[i])].base_load;
    return p;
}

namespace {

BusType parse_bus_type(const std::string& s) {
    if (s == "slack") return BusType::Slack;
    if (s == "load") return BusType::Load;
    if (s == "gen") return BusType::Gen;
    throw CaseError("unknown bus type '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw CaseError("unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace

GridCase parse_case(const std::string& json_text, const std::string& id) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw CaseError("case parse failure: " + std::string(e.what()));
    }
    GridCase c;
    c.id = id;
    try {
        check_keys(j, {"id", "buses", "branches", "measurements"}, "case");
        if (j.contains("id")) c.id = j.at("id").get<std::string>();
        for (const json& bj : j.at("buses")) {
            check_keys(bj, {"id", "type", "base_load"}, "bus");
            Bus b;
            b.id = bj.at("id").get<int>();
            b.type = parse_bus_type(bj.at("type").get<std::string>());
            b.base_load = bj.value("base_load", 0.0);
            c.buses.push_back(b);
        }
        for (const json& rj : j.at("branches")) {
            check_keys(rj, {"from", "to", "x"}, "branch");
            c.branches.push_back(
                {rj.at("from").get<int>(), rj.at("to").get<int>(), rj.at("x").get<double>()});
        }
        for (const json& mj : j.at("measurements")) {
            check_keys(mj, {"kind", "loc", "sigma"}, "measurement");
            MeasurementDef m;
            const std::string kind = mj.at("kind").get<std::string>();
            if (kind == "flow") {
                m.kind = MeasKind::Flow;
                m.from = mj.at("loc").at(0).get<int>();
                m.to = mj.at("loc").at(1).get<int>();
            } else if (kind == "injection") {
                m.kind = MeasKind::Injection;
                m.bus = mj.at("loc").get<int>();
            } else if (kind == "voltage") {
                m.kind = MeasKind::Voltage;
                m.bus = mj.at("loc").get<int>();
            } else {
                throw CaseError("unknown measurement kind '" + kind + "'");
            }
            m.sigma_rel = mj.value("sigma", 0.01);
            c.measurements.push_back(m);
        }
    } catch (const json::exception& e) {
        throw CaseError("case schema error: " + std::string(e.what()));
    }
    c.finalize();
    return c;
}

GridCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open case file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str(), path);
}

LoadProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open profile file: " + path);
    json j;
    try {
        j = json::parse(in);
        check_keys(j, {"shape", "noise_sigma"}, "profile");
        LoadProfile p;
        p.shape = j.at("shape").get<std::vector<double>>();
        p.noise_sigma = j.value("noise_sigma", 0.0);
        for (double s : p.shape)
            if (s <= 0.0) throw CaseError("profile factors must be positive");
        if (p.shape.empty()) throw CaseError("profile shape is empty");
        return p;
    } catch (const json::exception& e) {
        throw CaseError("profile schema error: " + std::string(e.what()));
    }
}

LoadProfile default_profile(int samples_per_day) {
    constexpr double kPi = 3.141592653589793238462643383279502884;
    LoadProfile p;
    p.shape.resize(samples_per_day);
    for (int k = 0; k < samples_per_day; ++k) {
        const double u = 2.0 * kPi * k / samples_per_day;
        p.shape[k] = 1.0 + 0.3 * std::sin(u - kPi / 2.0) + 0.1 * std::sin(2.0 * u);
    }
    p.noise_sigma = 0.01;
    return p;
}

DayStream simulate_day(const GridCase& c, const LoadProfile& profile, int samples,
                       std::uint64_t seed) {
    if (samples <= 0) throw CaseError("samples must be positive");
    if (profile.shape.empty()) throw CaseError("profile shape is empty");
    const int n = c.state_dim();
    const int d = c.meas_dim();
    DayStream out;
    out.z.resize(samples, d);
    out.z_true.resize(samples, d);
    Rng rng(seed);
    Eigen::VectorXd p(n);
    const Eigen::VectorXd base = c.base_injections();
    for (int k = 0; k < samples; ++k) {
        const double s = profile.shape[k % profile.shape.size()];
        for (int i = 0; i < n; ++i)
            p(i) = base(i) * s * (1.0 + profile.noise_sigma * rng.gaussian());
        const Eigen::VectorXd zt = c.measure(c.solve_angles(p));
        out.z_true.row(k) = zt.transpose();
        for (int r = 0; r < d; ++r) {
            const double sd = c.measurements[r].sigma_rel * std::abs(zt(r));
            out.z(k, r) = zt(r) + sd * rng.gaussian();
        }
    }
    return out;
}

}  // namespace gridshield::grid
