#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridshield/attackgen.hpp"
#include "gridshield/detector.hpp"
#include "gridshield/grid.hpp"

namespace gridshield::eval {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Confusion {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    long total() const { return tp + fp + tn + fn; }
};

/// Percent-valued classification metrics; anomalous is the positive class.
/// A zero denominator defines the metric as 0 and sets the flag.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_division = false;
};

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels);
Metrics metrics_from_confusion(const Confusion& c);
Metrics score(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Sliding cross-validation protocol: fold f trains on
/// [offset*f, offset*f + k1) and tests on the following k2 samples.
struct EvalProtocol {
    int folds = 10;
    long k1 = 1800;
    long k2 = 10800;
    long fold_offset = 1000;

    long required_samples() const { return fold_offset * (folds - 1) + k1 + k2; }
};

/// One fold's raw method output. Log rows are pre-formatted CSV lines so the
/// caller can persist per-sample detail without knowing the method internals.
struct MethodRun {
    std::vector<int> predictions;
    std::string log_header;
    std::vector<std::string> log_rows;
};

/// Runs one fold: fit on the training slice, predict the test slice.
using MethodFactory = std::function<MethodRun(
    const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
    const Eigen::MatrixXd& test_x, long test_base_index)>;

struct FoldResult {
    int fold = 0;
    Confusion conf;
    Metrics metrics;
    double wall_ms = 0.0;
    std::string log_header;
    std::vector<std::string> log_rows;
};

struct EvalReport {
    std::string method;
    std::string layer;
    std::string information;
    std::vector<FoldResult> folds;
    Metrics mean;
    Metrics stddev;  // population std over folds
};

EvalReport cross_validate(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const MethodFactory& method, const EvalProtocol& protocol,
                          int threads = 1, bool keep_logs = false);

/// Per-attack-type default threshold multiplier (11 for FDI-style sets,
/// 7 for DoS/MITM-style sets).
double default_eta(attack::ScenarioKind kind);

/// Ensemble evaluation on one layout of a dataset. `global` collapses the
/// ensemble to a single all-column detector (plain CorrDet when adaptation is
/// also disabled in the config).
EvalReport evaluate_ensemble(const attack::LabeledDataset& ds, attack::Layout layout,
                             const detect::EnsembleConfig& cfg,
                             const EvalProtocol& protocol, int threads = 1,
                             bool global = false, bool keep_logs = false);

/// Physics-based chi-squared baseline on the SG channel.
EvalReport evaluate_se(const attack::LabeledDataset& ds, const grid::GridCase& c,
                       double p, const EvalProtocol& protocol, int threads = 1,
                       bool keep_logs = false);

struct BetaSweepRow {
    int beta = 0;
    double f1_mean = 0.0;
    double f1_std = 0.0;
    double wall_ms = 0.0;
    bool knee = false;  // first beta where the F1 gain drops below 0.5 points
};

std::vector<BetaSweepRow> sweep_beta(const attack::LabeledDataset& ds,
                                     attack::Layout layout, detect::EnsembleConfig cfg,
                                     const EvalProtocol& protocol,
                                     const std::vector<int>& betas, int threads = 1);

/// Table rows mirroring the per-layer method comparison: the SE baseline,
/// single-channel ensembles and the cross-layer ensemble; PC-layout datasets
/// (MITM) get the PC ensemble row only.
std::vector<EvalReport> compare_methods(const attack::LabeledDataset& ds,
                                        const grid::GridCase& c,
                                        detect::EnsembleConfig cfg,
                                        const EvalProtocol& protocol, int threads = 1);

}  // namespace gridshield::eval
