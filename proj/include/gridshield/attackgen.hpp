#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridshield/detector.hpp"
#include "gridshield/grid.hpp"
#include "gridshield/netsim.hpp"

namespace gridshield::attack {

struct AttackError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ScenarioKind { Mfdi, CMfdi, Mdos, MfdiMdos, Mitm };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

/// Feature layout selected for detection. Cross concatenates [SG, IAT, TD]
/// per measurement (3d columns); single-channel layouts take d columns.
enum class Layout { Sg, Iat, Td, Pc, Cross };

std::string to_string(Layout l);
Layout layout_from_string(const std::string& s);

/// Channel-set description shared by every dataset built from one case:
/// measurement count, per-measurement owner bus, per-measurement sigma, and
/// the queue parameters that produced the network channels.
struct ChannelSetMeta {
    std::string case_id;
    int d = 0;
    std::vector<int> owner_bus;   // per measurement
    std::vector<int> bus_ids;     // distinct owners, ascending
    std::vector<double> sigmas;   // absolute, from the case
    net::QueueParams queue;

    std::vector<int> measurements_of(int bus) const;
};

struct AttackScenario {
    ScenarioKind kind = ScenarioKind::Mfdi;
    double attack_fraction = 0.05;  // per-sample event-start probability
    int targets_per_event = 0;      // 0 = kind default (2/2/3/4/1)
    int burst_length = 10;          // consecutive samples per DoS/MITM event
    double fdi_magnitude = 10.0;    // injected error in multiples of sigma_i
    double severity_low = 0.0;      // 0 = kind default band ([2,7], [1.2,2) C-MFDI)
    double severity_high = 0.0;
    std::uint64_t seed = 1;

    int resolved_targets() const;
    std::pair<double, double> resolved_severity_band() const;
    void validate() const;
};

struct AttackEvent {
    std::string kind;
    long start = 0;
    int length = 1;
    std::vector<int> buses;
    std::vector<int> measurements;
    double severity = 1.0;
    std::vector<double> magnitudes;  // signed injected errors, measurement units
};

/// Labeled cross-layer dataset. Channels are stored in fixed column order
/// [sg(d) | iat(d) | td(d) | pc(d)]; detection layouts are views over these
/// columns. The canonical layout is Cross for every scenario except MITM (Pc).
struct LabeledDataset {
    ChannelSetMeta meta;
    Layout layout = Layout::Cross;
    Eigen::MatrixXd channels;  // samples x 4d
    std::vector<int> labels;
    std::vector<std::string> attack_kind;  // "none" on normal samples
    std::vector<AttackEvent> events;
    long attacked_count = 0;
    bool null_attack = false;  // transforms were identities; labels still set
    std::string scenario_name = "none";

    long samples() const { return channels.rows(); }
    int sg_col(int m) const { return m; }
    int iat_col(int m) const { return meta.d + m; }
    int td_col(int m) const { return 2 * meta.d + m; }
    int pc_col(int m) const { return 3 * meta.d + m; }

    /// Materialized feature view for one layout plus the matching per-bus
    /// groups (3 columns per owned measurement for Cross, 1 otherwise).
    struct FeatureView {
        Eigen::MatrixXd features;
        std::vector<detect::Group> groups;
    };
    FeatureView view(Layout l) const;
};

/// Builds the clean (all-normal) dataset: SG rows from the grid simulation,
/// one independent network stream per measurement drawn from the owner bus's
/// queue parameters (sub-seeded by measurement index).
LabeledDataset assemble_clean(const grid::GridCase& c, const Eigen::MatrixXd& z_sg,
                              const net::QueueParams& q, std::uint64_t seed);

/// The five labeled attack sets. Placement draw order per builder: one
/// uniform per sample index (event starts), then per event: target picks,
/// severity, sign/magnitude draws.
LabeledDataset make_mfdi(const LabeledDataset& clean, const AttackScenario& sc);
LabeledDataset make_cmfdi(const LabeledDataset& clean, const grid::GridCase& c,
                          const AttackScenario& sc);
LabeledDataset make_mdos(const LabeledDataset& clean, const AttackScenario& sc);
LabeledDataset make_mfdi_mdos(const LabeledDataset& clean, const AttackScenario& sc);
LabeledDataset make_mitm(const LabeledDataset& clean, const AttackScenario& sc);

/// Dispatch on scenario kind (C-MFDI needs the case for innovation indices).
LabeledDataset make_dataset(const LabeledDataset& clean, const grid::GridCase& c,
                            const AttackScenario& sc);

}  // namespace gridshield::attack
