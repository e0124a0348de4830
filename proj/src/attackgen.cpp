#include "gridshield/attackgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridshield/estimator.hpp"
#include "gridshield/rng.hpp"

namespace gridshield::attack {

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Mfdi: return "mfdi";
        case ScenarioKind::CMfdi: return "c_mfdi";
        case ScenarioKind::Mdos: return "mdos";
        case ScenarioKind::MfdiMdos: return "mfdi_mdos";
        case ScenarioKind::Mitm: return "mitm";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "mfdi") return ScenarioKind::Mfdi;
    if (s == "c_mfdi") return ScenarioKind::CMfdi;
    if (s == "mdos") return ScenarioKind::Mdos;
    if (s == "mfdi_mdos") return ScenarioKind::MfdiMdos;
    if (s == "mitm") return ScenarioKind::Mitm;
    throw AttackError("unknown scenario kind '" + s + "'");
}

std::string to_string(Layout l) {
    switch (l) {
        case Layout::Sg: return "sg";
        case Layout::Iat: return "iat";
        case Layout::Td: return "td";
        case Layout::Pc: return "pc";
        case Layout::Cross: return "cross";
    }
    return "?";
}

Layout layout_from_string(const std::string& s) {
    if (s == "sg") return Layout::Sg;
    if (s == "iat") return Layout::Iat;
    if (s == "td") return Layout::Td;
    if (s == "pc") return Layout::Pc;
    if (s == "cross" || s == "all") return Layout::Cross;
    throw AttackError("unknown layout '" + s + "'");
}

std::vector<int> ChannelSetMeta::measurements_of(int bus) const {
    std::vector<int> out;
    for (int c = 0; c < d; ++c)
        if (owner_bus[c] == bus) out.push_back(c);
    return out;
}

int AttackScenario::resolved_targets() const {
    if (targets_per_event > 0) return targets_per_event;
    switch (kind) {
        case ScenarioKind::Mfdi:
        case ScenarioKind::CMfdi: return 2;
        case ScenarioKind::Mdos: return 3;
        case ScenarioKind::MfdiMdos: return 4;
        case ScenarioKind::Mitm: return 1;
    }
    return 1;
}

std::pair<double, double> AttackScenario::resolved_severity_band() const {
    if (severity_low > 0.0)
        return {severity_low, std::max(severity_low, severity_high)};
    if (kind == ScenarioKind::CMfdi) return {1.2, 2.0};
    return {2.0, 7.0};
}

void AttackScenario::validate() const {
    if (attack_fraction <= 0.0 || attack_fraction >= 1.0)
        throw AttackError("attack_fraction must be in (0, 1)");
    if (burst_length < 1) throw AttackError("burst_length must be >= 1");
    if (fdi_magnitude < 0.0) throw AttackError("fdi_magnitude must be non-negative");
    const auto [lo, hi] = resolved_severity_band();
    if (lo < 1.0 || hi < lo) throw AttackError("severity band must satisfy 1 <= lo <= hi");
}

LabeledDataset::FeatureView LabeledDataset::view(Layout l) const {
    const int d = meta.d;
    std::vector<int> cols;
    switch (l) {
        case Layout::Sg:
            for (int c = 0; c < d; ++c) cols.push_back(sg_col(c));
            break;
        case Layout::Iat:
            for (int c = 0; c < d; ++c) cols.push_back(iat_col(c));
            break;
        case Layout::Td:
            for (int c = 0; c < d; ++c) cols.push_back(td_col(c));
            break;
        case Layout::Pc:
            for (int c = 0; c < d; ++c) cols.push_back(pc_col(c));
            break;
        case Layout::Cross:
            for (int c = 0; c < 3 * d; ++c) cols.push_back(c);
            break;
    }
    FeatureView v;
    v.features.resize(channels.rows(), static_cast<long>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) v.features.col(j) = channels.col(cols[j]);

    for (int bus : meta.bus_ids) {
        detect::Group g;
        g.bus = bus;
        for (int c : meta.measurements_of(bus)) {
            if (l == Layout::Cross) {
                g.cols.push_back(c);
                g.cols.push_back(d + c);
                g.cols.push_back(2 * d + c);
            } else {
                g.cols.push_back(c);  // single-channel views are contiguous
            }
        }
        if (!g.cols.empty()) v.groups.push_back(std::move(g));
    }
    return v;
}

LabeledDataset assemble_clean(const grid::GridCase& c, const Eigen::MatrixXd& z_sg,
                              const net::QueueParams& q, std::uint64_t seed) {
    const int d = c.meas_dim();
    if (z_sg.cols() != d) throw AttackError("SG stream does not match the case");
    const long n = z_sg.rows();

    LabeledDataset ds;
    ds.meta.case_id = c.id;
    ds.meta.d = d;
    ds.meta.queue = q;
    std::set<int> owners;
    for (int m = 0; m < d; ++m) {
        ds.meta.owner_bus.push_back(c.measurements[m].owner_bus);
        ds.meta.sigmas.push_back(c.sigmas()(m));
        owners.insert(c.measurements[m].owner_bus);
    }
    ds.meta.bus_ids.assign(owners.begin(), owners.end());

    ds.channels.resize(n, 4 * d);
    ds.channels.block(0, 0, n, d) = z_sg;
    for (int m = 0; m < d; ++m) {
        const auto stream = net::gen_normal_channels(q, static_cast<int>(n),
                                                     derive_seed(seed, "net", m));
        for (long k = 0; k < n; ++k) {
            ds.channels(k, ds.iat_col(m)) = stream[k].iat;
            ds.channels(k, ds.td_col(m)) = stream[k].td;
            ds.channels(k, ds.pc_col(m)) = stream[k].pc;
        }
    }
    ds.labels.assign(n, 0);
    ds.attack_kind.assign(n, "none");
    return ds;
}

namespace {

/// Rate-inflation transform of already-generated channels for one sample.
/// IAT shrinks by the severity factor, TD is rescaled from the normal sojourn
/// scale 1/(mu-lambda) to 1/(mu-s*lambda) (capped once s*lambda reaches mu),
/// PC grows by the factor where the attack inflates traffic volume.
void scale_channels(LabeledDataset& ds, long k, const std::vector<int>& meas,
                    double s, bool include_pc) {
    const double lam = ds.meta.queue.lambda;
    const double mu = ds.meta.queue.mu;
    const double cap = ds.meta.queue.td_cap();
    for (int c : meas) {
        ds.channels(k, ds.iat_col(c)) /= s;
        double& td = ds.channels(k, ds.td_col(c));
        if (s * lam >= mu)
            td = cap;
        else
            td = std::min(td * (mu - lam) / (mu - s * lam), cap);
        if (include_pc) ds.channels(k, ds.pc_col(c)) *= s;
    }
}

std::vector<int> owner_buses_of(const ChannelSetMeta& meta, const std::vector<int>& meas) {
    std::set<int> buses;
    for (int c : meas) buses.insert(meta.owner_bus[c]);
    return {buses.begin(), buses.end()};
}

std::vector<int> owned_measurements(const ChannelSetMeta& meta,
                                    const std::vector<int>& buses) {
    std::vector<int> out;
    for (int bus : buses)
        for (int c : meta.measurements_of(bus)) out.push_back(c);
    return out;
}

void mark(LabeledDataset& ds, long k, const char* kind) {
    ds.labels[k] = 1;
    ds.attack_kind[k] = kind;
}

void finish(LabeledDataset& ds, const AttackScenario& sc) {
    ds.attacked_count = 0;
    for (int v : ds.labels) ds.attacked_count += v;
    ds.scenario_name = to_string(sc.kind);
}

// One MFDI hit: additive fdi_magnitude * sigma errors with random signs on
// `targets`, owner buses' IAT/TD inflated.
AttackEvent apply_mfdi_event(LabeledDataset& ds, Rng& rng, long k,
                             const std::vector<int>& targets, double severity,
                             double magnitude) {
    AttackEvent ev;
    ev.kind = "mfdi";
    ev.start = k;
    ev.length = 1;
    ev.measurements = targets;
    ev.severity = severity;
    for (int t : targets) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double err = sign * magnitude * ds.meta.sigmas[t];
        ev.magnitudes.push_back(err);
        ds.channels(k, ds.sg_col(t)) += err;
    }
    ev.buses = owner_buses_of(ds.meta, targets);
    scale_channels(ds, k, owned_measurements(ds.meta, ev.buses), severity,
                   /*include_pc=*/false);
    mark(ds, k, "mfdi");
    return ev;
}

// One DoS burst: victims' SG rows go stale (value just before the event is
// held, modeling lost polls) and their channels inflate for the whole burst.
AttackEvent apply_mdos_event(LabeledDataset& ds, long k, const std::vector<int>& buses,
                             double severity, int burst) {
    AttackEvent ev;
    ev.kind = "mdos";
    ev.start = k;
    ev.buses = buses;
    ev.severity = severity;
    ev.measurements = owned_measurements(ds.meta, buses);
    const long n = ds.samples();
    const long freeze_row = k > 0 ? k - 1 : 0;
    Eigen::VectorXd held(static_cast<long>(ev.measurements.size()));
    for (std::size_t i = 0; i < ev.measurements.size(); ++i)
        held(i) = ds.channels(freeze_row, ds.sg_col(ev.measurements[i]));
    long j = k;
    for (; j < std::min<long>(k + burst, n); ++j) {
        for (std::size_t i = 0; i < ev.measurements.size(); ++i)
            ds.channels(j, ds.sg_col(ev.measurements[i])) = held(i);
        scale_channels(ds, j, ev.measurements, severity, /*include_pc=*/true);
        mark(ds, j, "mdos");
    }
    ev.length = static_cast<int>(j - k);
    return ev;
}

}  // namespace

LabeledDataset make_mfdi(const LabeledDataset& clean, const AttackScenario& sc) {
    sc.validate();
    const int targets = sc.resolved_targets();
    if (targets > clean.meta.d)
        throw AttackError("targets_per_event exceeds measurement count");
    const auto [lo, hi] = sc.resolved_severity_band();

    LabeledDataset ds = clean;
    Rng rng(sc.seed);
    for (long k = 0; k < ds.samples(); ++k) {
        if (rng.uniform() >= sc.attack_fraction) continue;
        const std::vector<int> picked = rng.distinct(targets, ds.meta.d);
        const double severity = rng.uniform(lo, hi);
        ds.events.push_back(
            apply_mfdi_event(ds, rng, k, picked, severity, sc.fdi_magnitude));
    }
    finish(ds, sc);
    ds.null_attack = sc.fdi_magnitude == 0.0 && hi <= 1.0;
    return ds;
}

LabeledDataset make_cmfdi(const LabeledDataset& clean, const grid::GridCase& c,
                          const AttackScenario& sc) {
    sc.validate();
    if (clean.meta.case_id != c.id || clean.meta.d != c.meas_dim())
        throw AttackError("clean dataset does not match the case");
    const int targets = sc.resolved_targets();
    if (targets > clean.meta.d)
        throw AttackError("targets_per_event exceeds measurement count");
    const auto [lo, hi] = sc.resolved_severity_band();

    // Coordinated targeting: the bottom innovation-index quartile, attacked
    // along the Jacobian range space so the residual barely moves.
    const Eigen::VectorXd ii = se::compute_ii(se::projection_matrix(c));
    std::vector<int> order(clean.meta.d);
    for (int i = 0; i < clean.meta.d; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return ii(a) < ii(b); });
    const int pool_size =
        std::max(targets, (clean.meta.d + 3) / 4);
    const std::vector<int> pool(order.begin(), order.begin() + pool_size);

    const Eigen::MatrixXd& h = c.jacobian();
    LabeledDataset ds = clean;
    Rng rng(sc.seed);
    for (long k = 0; k < ds.samples(); ++k) {
        if (rng.uniform() >= sc.attack_fraction) continue;
        const std::vector<int> pick = rng.distinct(targets, pool_size);
        const double severity = rng.uniform(lo, hi);

        AttackEvent ev;
        ev.kind = "c_mfdi";
        ev.start = k;
        ev.length = 1;
        ev.severity = severity;
        for (int p : pick) {
            const int t = pool[p];
            ev.measurements.push_back(t);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double target_err = sign * sc.fdi_magnitude * ds.meta.sigmas[t];
            ev.magnitudes.push_back(target_err);
            // a = H c with c = H_t', scaled to hit target_err on coordinate t.
            const Eigen::VectorXd a = h * h.row(t).transpose();
            if (std::abs(a(t)) > 0.0)
                ds.channels.row(k).segment(0, ds.meta.d) +=
                    (target_err / a(t)) * a.transpose();
        }
        ev.buses = owner_buses_of(ds.meta, ev.measurements);
        scale_channels(ds, k, owned_measurements(ds.meta, ev.buses), severity, false);
        mark(ds, k, "c_mfdi");
        ds.events.push_back(std::move(ev));
    }
    finish(ds, sc);
    ds.null_attack = sc.fdi_magnitude == 0.0 && hi <= 1.0;
    return ds;
}

LabeledDataset make_mdos(const LabeledDataset& clean, const AttackScenario& sc) {
    sc.validate();
    const int targets = sc.resolved_targets();
    if (targets > static_cast<int>(clean.meta.bus_ids.size()))
        throw AttackError("targets_per_event exceeds bus count");
    const auto [lo, hi] = sc.resolved_severity_band();

    LabeledDataset ds = clean;
    Rng rng(sc.seed);
    for (long k = 0; k < ds.samples(); ++k) {
        if (rng.uniform() >= sc.attack_fraction) continue;
        const std::vector<int> pick = rng.distinct(targets, ds.meta.bus_ids.size());
        std::vector<int> buses;
        for (int p : pick) buses.push_back(ds.meta.bus_ids[p]);
        const double severity = rng.uniform(lo, hi);
        ds.events.push_back(apply_mdos_event(ds, k, buses, severity, sc.burst_length));
    }
    finish(ds, sc);
    return ds;
}

LabeledDataset make_mfdi_mdos(const LabeledDataset& clean, const AttackScenario& sc) {
    sc.validate();
    const int targets = sc.resolved_targets();
    if (targets > clean.meta.d ||
        targets > static_cast<int>(clean.meta.bus_ids.size()))
        throw AttackError("targets_per_event exceeds measurement or bus count");
    const auto [lo, hi] = sc.resolved_severity_band();

    LabeledDataset ds = clean;
    Rng rng(sc.seed);
    for (long k = 0; k < ds.samples(); ++k) {
        if (rng.uniform() >= sc.attack_fraction) continue;
        const bool fdi = rng.uniform() < 0.5;
        if (fdi) {
            const std::vector<int> picked = rng.distinct(targets, ds.meta.d);
            const double severity = rng.uniform(lo, hi);
            ds.events.push_back(
                apply_mfdi_event(ds, rng, k, picked, severity, sc.fdi_magnitude));
        } else {
            const std::vector<int> pick = rng.distinct(targets, ds.meta.bus_ids.size());
            std::vector<int> buses;
            for (int p : pick) buses.push_back(ds.meta.bus_ids[p]);
            const double severity = rng.uniform(lo, hi);
            ds.events.push_back(
                apply_mdos_event(ds, k, buses, severity, sc.burst_length));
        }
    }
    finish(ds, sc);
    return ds;
}

LabeledDataset make_mitm(const LabeledDataset& clean, const AttackScenario& sc) {
    sc.validate();
    const auto [lo, hi] = sc.resolved_severity_band();

    LabeledDataset ds = clean;
    ds.layout = Layout::Pc;  // traffic volume is the only channel MITM touches
    Rng rng(sc.seed);
    const long n = ds.samples();
    for (long k = 0; k < n; ++k) {
        if (rng.uniform() >= sc.attack_fraction) continue;
        const int bus = ds.meta.bus_ids[rng.below(ds.meta.bus_ids.size())];
        const double severity = rng.uniform(lo, hi);
        AttackEvent ev;
        ev.kind = "mitm";
        ev.start = k;
        ev.buses = {bus};
        ev.severity = severity;
        ev.measurements = ds.meta.measurements_of(bus);
        long j = k;
        for (; j < std::min<long>(k + sc.burst_length, n); ++j) {
            for (int c : ev.measurements) ds.channels(j, ds.pc_col(c)) *= severity;
            mark(ds, j, "mitm");
        }
        ev.length = static_cast<int>(j - k);
        ds.events.push_back(std::move(ev));
    }
    finish(ds, sc);
    ds.null_attack = hi <= 1.0;
    return ds;
}

LabeledDataset make_dataset(const LabeledDataset& clean, const grid::GridCase& c,
                            const AttackScenario& sc) {
    switch (sc.kind) {
        case ScenarioKind::Mfdi: return make_mfdi(clean, sc);
        case ScenarioKind::CMfdi: return make_cmfdi(clean, c, sc);
        case ScenarioKind::Mdos: return make_mdos(clean, sc);
        case ScenarioKind::MfdiMdos: return make_mfdi_mdos(clean, sc);
        case ScenarioKind::Mitm: return make_mitm(clean, sc);
    }
    throw AttackError("unknown scenario kind");
}

}  // namespace gridshield::attack
