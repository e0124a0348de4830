#include "gridshield/eval.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <thread>

#include "gridshield/estimator.hpp"

namespace gridshield::eval {

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw EvalError("prediction and label lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw EvalError("labels must be binary");
        if (labels[i] == 1)
            (predictions[i] == 1 ? c.tp : c.fn)++;
        else
            (predictions[i] == 1 ? c.fp : c.tn)++;
    }
    return c;
}

Metrics metrics_from_confusion(const Confusion& c) {
    Metrics m;
    const long total = c.total();
    if (total == 0) {
        m.zero_division = true;
        return m;
    }
    m.accuracy = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    if (c.tp + c.fp > 0)
        m.precision = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    else
        m.zero_division = true;
    if (c.tp + c.fn > 0)
        m.recall = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    else
        m.zero_division = true;
    const double p = m.precision / 100.0;
    const double r = m.recall / 100.0;
    if (p + r > 0.0)
        m.f1 = 100.0 * 2.0 * p * r / (p + r);
    else
        m.zero_division = true;
    return m;
}

Metrics score(const std::vector<int>& predictions, const std::vector<int>& labels) {
    return metrics_from_confusion(confusion(predictions, labels));
}

namespace {

void accumulate_stats(EvalReport& rep) {
    const auto n = static_cast<double>(rep.folds.size());
    auto fold_metric = [&](const FoldResult& f, int which) {
        switch (which) {
            case 0: return f.metrics.accuracy;
            case 1: return f.metrics.precision;
            case 2: return f.metrics.recall;
            default: return f.metrics.f1;
        }
    };
    double* means[] = {&rep.mean.accuracy, &rep.mean.precision, &rep.mean.recall,
                       &rep.mean.f1};
    double* stds[] = {&rep.stddev.accuracy, &rep.stddev.precision, &rep.stddev.recall,
                      &rep.stddev.f1};
    for (int w = 0; w < 4; ++w) {
        double mean = 0.0;
        for (const FoldResult& f : rep.folds) mean += fold_metric(f, w);
        mean /= n;
        double var = 0.0;
        for (const FoldResult& f : rep.folds) {
            const double dev = fold_metric(f, w) - mean;
            var += dev * dev;
        }
        *means[w] = mean;
        *stds[w] = std::sqrt(var / n);
    }
}

void run_parallel(int jobs, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || jobs <= 1) {
        for (int i = 0; i < jobs; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= jobs) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, jobs);
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

EvalReport cross_validate(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const MethodFactory& method, const EvalProtocol& protocol,
                          int threads, bool keep_logs) {
    if (protocol.folds < 1) throw EvalError("folds must be >= 1");
    if (features.rows() != static_cast<long>(labels.size()))
        throw EvalError("feature rows and label count differ");
    if (features.rows() < protocol.required_samples())
        throw EvalError("dataset too short: need " +
                        std::to_string(protocol.required_samples()) + " samples, have " +
                        std::to_string(features.rows()));

    EvalReport rep;
    rep.folds.resize(protocol.folds);
    run_parallel(protocol.folds, threads, [&](int f) {
        const long train_begin = protocol.fold_offset * f;
        const long test_begin = train_begin + protocol.k1;
        const Eigen::MatrixXd train_x =
            features.block(train_begin, 0, protocol.k1, features.cols());
        const std::vector<int> train_y(labels.begin() + train_begin,
                                       labels.begin() + test_begin);
        const Eigen::MatrixXd test_x =
            features.block(test_begin, 0, protocol.k2, features.cols());
        const std::vector<int> test_y(labels.begin() + test_begin,
                                      labels.begin() + test_begin + protocol.k2);

        const auto t0 = std::chrono::steady_clock::now();
        MethodRun run = method(train_x, train_y, test_x, test_begin);
        const auto t1 = std::chrono::steady_clock::now();

        FoldResult& fr = rep.folds[f];
        fr.fold = f;
        fr.conf = confusion(run.predictions, test_y);
        fr.metrics = metrics_from_confusion(fr.conf);
        fr.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (keep_logs) {
            fr.log_header = std::move(run.log_header);
            fr.log_rows = std::move(run.log_rows);
        }
    });
    accumulate_stats(rep);
    return rep;
}

double default_eta(attack::ScenarioKind kind) {
    switch (kind) {
        case attack::ScenarioKind::Mfdi:
        case attack::ScenarioKind::CMfdi:
            return 11.0;
        default:
            return 7.0;
    }
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

MethodRun run_ensemble_fold(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                            const Eigen::MatrixXd& test_x, long base,
                            const std::vector<detect::Group>& groups,
                            const detect::EnsembleConfig& cfg, bool keep_logs) {
    detect::EnsembleDetector det(groups, cfg);
    det.fit(train_x, train_y);
    MethodRun run;
    run.predictions.reserve(test_x.rows());
    if (keep_logs) run.log_header = "index,predicted,max_ratio,triggering_buses";
    for (long i = 0; i < test_x.rows(); ++i) {
        const detect::Detection d = det.step(test_x.row(i).transpose(), base + i);
        run.predictions.push_back(d.predicted ? 1 : 0);
        if (keep_logs) {
            std::string buses;
            for (std::size_t b = 0; b < d.triggering_buses.size(); ++b) {
                if (b) buses += ';';
                buses += std::to_string(d.triggering_buses[b]);
            }
            run.log_rows.push_back(std::to_string(d.index) + "," +
                                   (d.predicted ? "1," : "0,") + fmt_double(d.max_ratio) +
                                   "," + buses);
        }
    }
    return run;
}

}  // namespace

EvalReport evaluate_ensemble(const attack::LabeledDataset& ds, attack::Layout layout,
                             const detect::EnsembleConfig& cfg,
                             const EvalProtocol& protocol, int threads, bool global,
                             bool keep_logs) {
    const attack::LabeledDataset::FeatureView v = ds.view(layout);
    std::vector<detect::Group> groups;
    if (global) {
        detect::Group all;
        all.bus = 0;
        for (long j = 0; j < v.features.cols(); ++j)
            all.cols.push_back(static_cast<int>(j));
        groups.push_back(std::move(all));
    } else {
        groups = v.groups;
    }

    EvalReport rep = cross_validate(
        v.features, ds.labels,
        [&](const Eigen::MatrixXd& tr_x, const std::vector<int>& tr_y,
            const Eigen::MatrixXd& te_x, long base) {
            return run_ensemble_fold(tr_x, tr_y, te_x, base, groups, cfg, keep_logs);
        },
        protocol, threads, keep_logs);

    const bool adaptive = cfg.adapt;
    rep.method = global ? (adaptive ? "cd-as" : "cd")
                        : (layout == attack::Layout::Cross ? "cecd-as" : "ecd-as");
    switch (layout) {
        case attack::Layout::Sg:
            rep.layer = "smart grid";
            rep.information = "SG";
            break;
        case attack::Layout::Iat:
            rep.layer = "network";
            rep.information = "IAT";
            break;
        case attack::Layout::Td:
            rep.layer = "network";
            rep.information = "TD";
            break;
        case attack::Layout::Pc:
            rep.layer = "network";
            rep.information = "PC";
            break;
        case attack::Layout::Cross:
            rep.layer = "cross-layer";
            rep.information = "[SG, IAT, TD]";
            break;
    }
    return rep;
}

EvalReport evaluate_se(const attack::LabeledDataset& ds, const grid::GridCase& c,
                       double p, const EvalProtocol& protocol, int threads,
                       bool keep_logs) {
    if (ds.meta.case_id != c.id || ds.meta.d != c.meas_dim())
        throw EvalError("dataset does not match the case");
    const attack::LabeledDataset::FeatureView v = ds.view(attack::Layout::Sg);

    // Case-level quantities are shared by every fold.
    const Eigen::VectorXd ii = se::compute_ii(se::projection_matrix(c));
    const double threshold = se::chi2_quantile(p, c.meas_dim());

    EvalReport rep = cross_validate(
        v.features, ds.labels,
        [&](const Eigen::MatrixXd&, const std::vector<int>&, const Eigen::MatrixXd& te_x,
            long base) {
            MethodRun run;
            run.predictions.reserve(te_x.rows());
            if (keep_logs) run.log_header = "index,predicted,j_cme,threshold";
            for (long i = 0; i < te_x.rows(); ++i) {
                const Eigen::VectorXd z = te_x.row(i).transpose();
                const se::WlsSolution sol = se::wls_solve(c, z);
                const Eigen::VectorXd r = z - c.measure(sol.x_hat);
                const Eigen::VectorXd cme = se::compute_cme(r, ii);
                double j = 0.0;
                for (int m = 0; m < c.meas_dim(); ++m) {
                    const double t = cme(m) / c.sigmas()(m);
                    j += t * t;
                }
                const bool detected = j > threshold;
                run.predictions.push_back(detected ? 1 : 0);
                if (keep_logs)
                    run.log_rows.push_back(std::to_string(base + i) + "," +
                                           (detected ? "1," : "0,") + fmt_double(j) + "," +
                                           fmt_double(threshold));
            }
            return run;
        },
        protocol, threads, keep_logs);
    rep.method = "se";
    rep.layer = "smart grid";
    rep.information = "SG";
    return rep;
}

std::vector<BetaSweepRow> sweep_beta(const attack::LabeledDataset& ds,
                                     attack::Layout layout, detect::EnsembleConfig cfg,
                                     const EvalProtocol& protocol,
                                     const std::vector<int>& betas, int threads) {
    if (betas.empty()) throw EvalError("beta sweep needs at least one value");
    std::vector<BetaSweepRow> rows;
    rows.reserve(betas.size());
    for (int beta : betas) {
        cfg.beta = beta;
        const auto t0 = std::chrono::steady_clock::now();
        const EvalReport rep = evaluate_ensemble(ds, layout, cfg, protocol, threads);
        const auto t1 = std::chrono::steady_clock::now();
        BetaSweepRow row;
        row.beta = beta;
        row.f1_mean = rep.mean.f1;
        row.f1_std = rep.stddev.f1;
        row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rows.push_back(row);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].f1_mean - rows[i - 1].f1_mean < 0.5) {
            rows[i].knee = true;
            break;
        }
    }
    return rows;
}

std::vector<EvalReport> compare_methods(const attack::LabeledDataset& ds,
                                        const grid::GridCase& c,
                                        detect::EnsembleConfig cfg,
                                        const EvalProtocol& protocol, int threads) {
    std::vector<EvalReport> out;
    if (ds.layout == attack::Layout::Pc) {
        // MITM-style sets carry their signal in traffic volume only.
        out.push_back(evaluate_ensemble(ds, attack::Layout::Pc, cfg, protocol, threads));
        return out;
    }
    out.push_back(evaluate_se(ds, c, 0.95, protocol, threads));
    out.push_back(evaluate_ensemble(ds, attack::Layout::Sg, cfg, protocol, threads));
    out.push_back(evaluate_ensemble(ds, attack::Layout::Iat, cfg, protocol, threads));
    out.push_back(evaluate_ensemble(ds, attack::Layout::Td, cfg, protocol, threads));
    out.push_back(evaluate_ensemble(ds, attack::Layout::Cross, cfg, protocol, threads));
    return out;
}

}  // namespace gridshield::eval
