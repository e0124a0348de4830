#include "gridshield/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gridshield/rng.hpp"

namespace gridshield::io {

using nlohmann::json;

const char* tool_version() { return "0.1.0"; }

std::string format_double(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    double out = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw IoError("malformed number '" + s + "'");
    return out;
}

std::string content_fingerprint(const std::string& content) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    return buf;
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for fingerprinting: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return content_fingerprint(ss.str());
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("short write on " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::map<std::string, std::string> parse_kv(const std::string& line) {
    std::map<std::string, std::string> kv;
    for (const std::string& tok : split(line, ' ')) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

const char* kChannelNames[4] = {"sg", "iat", "td", "pc"};

}  // namespace

void write_trace(const std::string& path, const attack::LabeledDataset& ds,
                 const std::string& config_hash) {
    const int d = ds.meta.d;
    std::string out;
    out.reserve(static_cast<std::size_t>(ds.samples()) * (4 * d + 3) * 12);

    out += "# gridshield-trace v1";
    out += " case=" + ds.meta.case_id;
    out += " scenario=" + ds.scenario_name;
    out += " layout=" + attack::to_string(ds.layout);
    out += " lambda=" + format_double(ds.meta.queue.lambda);
    out += " mu=" + format_double(ds.meta.queue.mu);
    out += " poll=" + format_double(ds.meta.queue.poll_interval);
    out += " tdcap=" + format_double(ds.meta.queue.td_cap_factor);
    out += " null=" + std::string(ds.null_attack ? "1" : "0");
    out += " attacked=" + std::to_string(ds.attacked_count);
    out += " config=" + config_hash;
    out += " version=" + std::string(tool_version());
    out += "\n# sigmas=";
    for (int m = 0; m < d; ++m) {
        if (m) out += ',';
        out += format_double(ds.meta.sigmas[m]);
    }
    out += "\nindex,label,attack_kind";
    for (int ch = 0; ch < 4; ++ch)
        for (int m = 0; m < d; ++m)
            out += "," + std::string(kChannelNames[ch]) + ":" +
                   std::to_string(ds.meta.owner_bus[m]) + ":" + std::to_string(m);
    out += '\n';

    for (long k = 0; k < ds.samples(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += std::to_string(ds.labels[k]);
        out += ',';
        out += ds.attack_kind[k];
        for (long c = 0; c < 4 * d; ++c) {
            out += ',';
            out += format_double(ds.channels(k, c));
        }
        out += '\n';
    }
    atomic_write(path, out);
}

attack::LabeledDataset read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace: " + path);
    std::string line;

    if (!std::getline(in, line) || line.rfind("# gridshield-trace v1", 0) != 0)
        throw IoError("not a gridshield trace: " + path);
    const auto kv = parse_kv(line);

    attack::LabeledDataset ds;
    ds.meta.case_id = kv.count("case") ? kv.at("case") : "";
    ds.scenario_name = kv.count("scenario") ? kv.at("scenario") : "none";
    ds.layout = attack::layout_from_string(kv.count("layout") ? kv.at("layout") : "cross");
    if (kv.count("lambda")) ds.meta.queue.lambda = parse_double(kv.at("lambda"));
    if (kv.count("mu")) ds.meta.queue.mu = parse_double(kv.at("mu"));
    if (kv.count("poll")) ds.meta.queue.poll_interval = parse_double(kv.at("poll"));
    if (kv.count("tdcap")) ds.meta.queue.td_cap_factor = parse_double(kv.at("tdcap"));
    ds.null_attack = kv.count("null") && kv.at("null") == "1";

    if (!std::getline(in, line) || line.rfind("# sigmas=", 0) != 0)
        throw IoError("trace missing sigma line: " + path);
    for (const std::string& tok : split(line.substr(9), ','))
        ds.meta.sigmas.push_back(parse_double(tok));

    if (!std::getline(in, line)) throw IoError("trace missing column header");
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() < 7 || (cols.size() - 3) % 4 != 0)
        throw IoError("trace column header malformed");
    const int d = static_cast<int>((cols.size() - 3) / 4);
    if (static_cast<int>(ds.meta.sigmas.size()) != d)
        throw IoError("sigma count does not match trace columns");
    ds.meta.d = d;
    ds.meta.owner_bus.resize(d);
    for (int m = 0; m < d; ++m) {
        const std::vector<std::string> parts = split(cols[3 + m], ':');
        if (parts.size() != 3 || parts[0] != "sg")
            throw IoError("trace column name malformed: " + cols[3 + m]);
        ds.meta.owner_bus[m] = std::stoi(parts[1]);
    }
    {
        std::set<int> owners(ds.meta.owner_bus.begin(), ds.meta.owner_bus.end());
        ds.meta.bus_ids.assign(owners.begin(), owners.end());
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, ',');
        if (static_cast<int>(f.size()) != 3 + 4 * d)
            throw IoError("trace row has wrong column count");
        ds.labels.push_back(std::stoi(f[1]));
        ds.attack_kind.push_back(f[2]);
        std::vector<double> vals(4 * d);
        for (int c = 0; c < 4 * d; ++c) vals[c] = parse_double(f[3 + c]);
        rows.push_back(std::move(vals));
    }
    ds.channels.resize(static_cast<long>(rows.size()), 4 * d);
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (int c = 0; c < 4 * d; ++c) ds.channels(k, c) = rows[k][c];
    ds.attacked_count = 0;
    for (int v : ds.labels) ds.attacked_count += v;
    return ds;
}

void write_manifest(const std::string& path, const attack::LabeledDataset& ds,
                    const std::string& config_hash) {
    json j;
    j["format"] = "gridshield-manifest";
    j["version"] = 1;
    j["config"] = config_hash;
    j["tool_version"] = tool_version();
    j["scenario"] = ds.scenario_name;
    j["attacked_count"] = ds.attacked_count;
    j["null_attack"] = ds.null_attack;
    json events = json::array();
    for (const attack::AttackEvent& e : ds.events) {
        json ej;
        ej["kind"] = e.kind;
        ej["start"] = e.start;
        ej["length"] = e.length;
        ej["buses"] = e.buses;
        ej["measurements"] = e.measurements;
        ej["severity"] = e.severity;
        ej["magnitudes"] = e.magnitudes;
        events.push_back(std::move(ej));
    }
    j["events"] = std::move(events);
    atomic_write(path, j.dump(2) + "\n");
}

std::vector<attack::AttackEvent> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "gridshield-manifest")
        throw IoError("not a gridshield manifest: " + path);
    std::vector<attack::AttackEvent> out;
    for (const json& ej : j.at("events")) {
        attack::AttackEvent e;
        e.kind = ej.at("kind").get<std::string>();
        e.start = ej.at("start").get<long>();
        e.length = ej.at("length").get<int>();
        e.buses = ej.at("buses").get<std::vector<int>>();
        e.measurements = ej.at("measurements").get<std::vector<int>>();
        e.severity = ej.at("severity").get<double>();
        e.magnitudes = ej.at("magnitudes").get<std::vector<double>>();
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

std::string metrics_csv(const eval::Metrics& m) {
    return format_double(m.accuracy) + "," + format_double(m.precision) + "," +
           format_double(m.recall) + "," + format_double(m.f1);
}

}  // namespace

void write_report_csv(const std::string& path,
                      const std::vector<eval::EvalReport>& reports,
                      const std::string& config_hash) {
    std::string out = "# gridshield-report v1 config=" + config_hash +
                      " version=" + tool_version() + "\n";
    out += "method,layer,information,fold,accuracy,precision,recall,f1,tp,fp,tn,fn,wall_ms\n";
    for (const eval::EvalReport& r : reports) {
        for (const eval::FoldResult& f : r.folds) {
            out += r.method + "," + r.layer + "," + r.information + "," +
                   std::to_string(f.fold) + "," + metrics_csv(f.metrics) + "," +
                   std::to_string(f.conf.tp) + "," + std::to_string(f.conf.fp) + "," +
                   std::to_string(f.conf.tn) + "," + std::to_string(f.conf.fn) + "," +
                   format_double(f.wall_ms) + "\n";
        }
    }
    atomic_write(path, out);
}

void write_summary_json(const std::string& path,
                        const std::vector<eval::EvalReport>& reports,
                        const std::string& config_hash) {
    json j;
    j["format"] = "gridshield-summary";
    j["version"] = 1;
    j["config"] = config_hash;
    j["tool_version"] = tool_version();
    json rs = json::array();
    for (const eval::EvalReport& r : reports) {
        json rj;
        rj["method"] = r.method;
        rj["layer"] = r.layer;
        rj["information"] = r.information;
        rj["folds"] = r.folds.size();
        json metrics;
        const struct {
            const char* name;
            double eval::Metrics::*field;
        } fields[] = {{"accuracy", &eval::Metrics::accuracy},
                      {"precision", &eval::Metrics::precision},
                      {"recall", &eval::Metrics::recall},
                      {"f1", &eval::Metrics::f1}};
        for (const auto& f : fields) {
            metrics[f.name] = {{"mean", r.mean.*(f.field)}, {"std", r.stddev.*(f.field)}};
        }
        rj["metrics"] = std::move(metrics);
        json conf = json::array();
        for (const eval::FoldResult& fr : r.folds)
            conf.push_back({{"fold", fr.fold},
                            {"tp", fr.conf.tp},
                            {"fp", fr.conf.fp},
                            {"tn", fr.conf.tn},
                            {"fn", fr.conf.fn}});
        rj["confusion"] = std::move(conf);
        rs.push_back(std::move(rj));
    }
    j["reports"] = std::move(rs);
    atomic_write(path, j.dump(2) + "\n");
}

void write_sweep_csv(const std::string& path,
                     const std::vector<eval::BetaSweepRow>& rows,
                     const std::string& config_hash) {
    std::string out = "# gridshield-sweep v1 config=" + config_hash +
                      " version=" + tool_version() + "\n";
    out += "beta,f1_mean,f1_std,wall_ms,knee\n";
    for (const eval::BetaSweepRow& r : rows)
        out += std::to_string(r.beta) + "," + format_double(r.f1_mean) + "," +
               format_double(r.f1_std) + "," + format_double(r.wall_ms) + "," +
               (r.knee ? "1" : "0") + "\n";
    atomic_write(path, out);
}

void write_detect_log(const std::string& path, const eval::EvalReport& report,
                      const std::string& config_hash) {
    std::string out = "# gridshield-detect v1 method=" + report.method +
                      " config=" + config_hash + " version=" + tool_version() + "\n";
    bool wrote_header = false;
    for (const eval::FoldResult& f : report.folds) {
        if (!wrote_header && !f.log_header.empty()) {
            out += "fold," + f.log_header + "\n";
            wrote_header = true;
        }
        for (const std::string& row : f.log_rows)
            out += std::to_string(f.fold) + "," + row + "\n";
    }
    atomic_write(path, out);
}

}  // namespace gridshield::io
