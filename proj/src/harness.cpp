#include "blab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "blab/field_io.hpp"

namespace blab {

namespace fs = std::filesystem;

std::string module_versions() {
    return "geometry/1 wkb/1 wave_solver/1 microlocal/1 vlasov/1 compcomp/1 elliptic_gauge/1 harness/1";
}

MetricModel MetricSpec::model(int n) const {
    const double a = amplitude;
    if (name == "minkowski") return minkowski(n);
    if (name == "unit-density") {
        if (n != 1) throw ConfigError("metric unit-density is defined for n = 1 only");
        return unit_density_1d([a](const Point& p) { return 1.0 + a * std::sin(p[1]); });
    }
    if (name == "conformal")
        return conformally_flat(n, [a](const Point& p) { return 1.0 + a * std::sin(p[1]) * std::cos(p[0]); });
    if (name == "boosted") return boosted_minkowski(n, a);
    throw ConfigError("unknown metric '" + name + "'");
}

std::vector<double> LadderSpec::values() const { return geometric_ladder(eps0, ratio, depth); }

double ExperimentConfig::tolerance(const std::string& key) const {
    const auto it = tol.find(key);
    if (it == tol.end()) throw ConfigError("scenario " + scenario + " needs tolerance '" + key + "'");
    return it->second;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError(key + ": not a number: '" + s + "'");
    return v;
}

// "0.125", "1/8", "2pi", "pi", "0.5pi"
double parse_number(const std::string& raw, const std::string& key) {
    std::string s = trim(raw);
    double scale = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        scale = kPi;
        s = trim(s.substr(0, s.size() - 2));
        if (s.empty()) return kPi;
    }
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        const double d = parse_plain(trim(s.substr(slash + 1)), key);
        if (d == 0.0) throw ConfigError(key + ": division by zero");
        return scale * parse_plain(trim(s.substr(0, slash)), key) / d;
    }
    return scale * parse_plain(s, key);
}

int parse_int(const std::string& raw, const std::string& key) {
    const double v = parse_number(raw, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + ": not an integer: '" + raw + "'");
    return int(v);
}

std::string num(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string short_num(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.8g", v);
    return b;
}

void apply(ExperimentConfig& c, const std::string& sec, const std::string& key, const std::string& val) {
    const std::string k = sec + "." + key;
    auto I = [&] { return parse_int(val, k); };
    auto D = [&] { return parse_number(val, k); };
    if (sec == "run") {
        if (key == "scenario") return;  // already applied
        if (key == "out") { c.out = trim(val); return; }
        if (key == "seed") {
            const double s = parse_number(val, k);
            if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15) throw ConfigError(k + ": bad seed");
            c.seed = std::uint64_t(s);
            return;
        }
        if (key == "threads") { c.threads = I(); return; }
    } else if (sec == "grid") {
        if (key == "n") { c.grid.n = I(); return; }
        if (key == "T") { c.grid.T = D(); return; }
        if (key == "L") { c.grid.L = D(); return; }
        if (key == "Nt") { c.grid.Nt = I(); return; }
        if (key == "Nx") { c.grid.Nx = I(); return; }
    } else if (sec == "metric") {
        if (key == "name") { c.metric.name = trim(val); return; }
        if (key == "amplitude") { c.metric.amplitude = D(); return; }
    } else if (sec == "family") {
        if (key == "kind") { c.family.kind = trim(val); return; }
        if (key == "k") { c.family.k = D(); return; }
        if (key == "amplitude") { c.family.amplitude = D(); return; }
        if (key == "width") { c.family.width = D(); return; }
    } else if (sec == "ladder") {
        if (key == "eps0") { c.ladder.eps0 = D(); return; }
        if (key == "ratio") { c.ladder.ratio = D(); return; }
        if (key == "depth") { c.ladder.depth = I(); return; }
    } else if (sec == "dictionary") {
        if (key == "cells_t") { c.dictionary.cells_t = I(); return; }
        if (key == "cells_x") { c.dictionary.cells_x = I(); return; }
        if (key == "margin") { c.dictionary.margin = D(); return; }
        if (key == "bins") { c.dictionary.bins = I(); return; }
    } else if (sec == "partition") {
        if (key == "delta1") { c.delta1 = D(); return; }
        if (key == "delta2") { c.delta2 = D(); return; }
    } else if (sec == "tolerances") {
        c.tol[key] = D();
        return;
    }
    throw ConfigError("unknown configuration key '" + k + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    std::string scenario = "null-plane-wave-minkowski";
    if (auto run = tree.get_child_optional("run"))
        if (auto s = run->get_optional<std::string>("scenario")) scenario = trim(*s);
    ExperimentConfig c = default_config(scenario);
    for (const auto& [sec, child] : tree) {
        if (child.empty()) throw ConfigError("config: key '" + sec + "' outside a section");
        for (const auto& [key, v] : child) apply(c, sec, key, v.data());
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return parse_config(os.str());
}

void validate(const ExperimentConfig& c) {
    find_scenario(c.scenario);
    const GridSpec& g = c.grid;
    if (g.n != 1 && g.n != 2) throw ConfigError("grid.n must be 1 or 2");
    if (!(g.T > 0.0) || !(g.L > 0.0)) throw ConfigError("grid.T and grid.L must be positive");
    if (g.Nt < 4 || g.Nx < 4) throw ConfigError("grid.Nt and grid.Nx must be at least 4");
    c.metric.model(g.n);
    static const std::set<std::string> kinds{"wkb",           "manufactured",       "null-plane", "crossing-null",
                                             "spatial-phase", "metric-oscillation", "wave-map",   "gauge"};
    if (!kinds.count(c.family.kind)) throw ConfigError("unknown family kind '" + c.family.kind + "'");
    if (!(c.family.width > 0.0)) throw ConfigError("family.width must be positive");
    if (!(c.ladder.eps0 > 0.0)) throw ConfigError("ladder.eps0 must be positive");
    if (!(c.ladder.ratio > 0.0 && c.ladder.ratio < 1.0)) throw ConfigError("ladder.ratio must lie in (0, 1)");
    if (c.ladder.depth < 3) throw ConfigError("ladder.depth must be at least 3");
    const DictionarySpec& d = c.dictionary;
    if (d.cells_t < 1 || d.cells_x < 1 || d.bins < 2) throw ConfigError("dictionary sizes must be positive");
    if (!(d.margin >= 0.0 && 2.0 * d.margin < g.T)) throw ConfigError("dictionary.margin must lie in [0, T/2)");
    // the frequency partition lemmas
    if (!(c.delta1 > 0.5 && c.delta1 < 1.0))
        throw ConfigError("partition.delta1 = " + short_num(c.delta1) +
                          " violates 1/2 < delta1 < 1 (low regime needs delta1 < 1, time regime delta1 > 1/2)");
    if (!(c.delta2 > 0.5 / c.delta1 && c.delta2 < 1.0))
        throw ConfigError("partition.delta2 = " + short_num(c.delta2) +
                          " violates 1/(2 delta1) < delta2 < 1 (spatial regime needs delta1 delta2 > 1/2)");
    if (c.threads < 1) throw ConfigError("run.threads must be at least 1");
    for (const auto& [k, v] : c.tol)
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("tolerances." + k + " must be finite and non-negative");
}

// out and threads are left out: neither may change what a run computes.
std::string canonical(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "run.scenario = " << c.scenario << "\n"
       << "run.seed = " << c.seed << "\n"
       << "grid.n = " << c.grid.n << "\n"
       << "grid.T = " << num(c.grid.T) << "\n"
       << "grid.L = " << num(c.grid.L) << "\n"
       << "grid.Nt = " << c.grid.Nt << "\n"
       << "grid.Nx = " << c.grid.Nx << "\n"
       << "metric.name = " << c.metric.name << "\n"
       << "metric.amplitude = " << num(c.metric.amplitude) << "\n"
       << "family.kind = " << c.family.kind << "\n"
       << "family.k = " << num(c.family.k) << "\n"
       << "family.amplitude = " << num(c.family.amplitude) << "\n"
       << "family.width = " << num(c.family.width) << "\n"
       << "ladder.eps0 = " << num(c.ladder.eps0) << "\n"
       << "ladder.ratio = " << num(c.ladder.ratio) << "\n"
       << "ladder.depth = " << c.ladder.depth << "\n"
       << "dictionary.cells_t = " << c.dictionary.cells_t << "\n"
       << "dictionary.cells_x = " << c.dictionary.cells_x << "\n"
       << "dictionary.margin = " << num(c.dictionary.margin) << "\n"
       << "dictionary.bins = " << c.dictionary.bins << "\n"
       << "partition.delta1 = " << num(c.delta1) << "\n"
       << "partition.delta2 = " << num(c.delta2) << "\n";
    for (const auto& [k, v] : c.tol) os << "tolerances." << k << " = " << num(v) << "\n";
    return os.str();
}

std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(canonical(c))); }

const char* status_name(Status s) {
    switch (s) {
        case Status::pass: return "PASS";
        case Status::fail: return "FAIL";
        case Status::expected_fail: return "EXPECTED-FAIL";
    }
    return "?";
}

bool RunRecord::passed() const {
    for (const Check& c : checks)
        if (c.status() == Status::fail) return false;
    return true;
}

std::string output_header(const ExperimentConfig& c) {
    return "# blab " + std::string(kBlabVersion) + " scenario=" + c.scenario + " config=" + config_hash(c) +
           " seed=" + std::to_string(c.seed) + " modules=" + module_versions();
}

RunContext::RunContext(const ExperimentConfig& c, RunRecord& r) : cfg_(c), rec_(r), header_(output_header(c)) {}

std::string RunContext::path(const std::string& file) {
    if (std::find(rec_.files.begin(), rec_.files.end(), file) == rec_.files.end()) rec_.files.push_back(file);
    const fs::path p = fs::path(rec_.dir) / file;
    fs::create_directories(p.parent_path());
    return p.string();
}

Check& RunContext::check(int criterion, const std::string& name, double value, const std::string& relation,
                         double threshold, bool control) {
    Check c;
    c.criterion = criterion;
    c.name = name;
    c.value = value;
    c.relation = relation;
    c.threshold = threshold;
    c.control = control;
    if (!std::isfinite(value)) c.ok = false;
    else if (relation == "<") c.ok = value < threshold;
    else if (relation == "<=") c.ok = value <= threshold;
    else if (relation == ">") c.ok = value > threshold;
    else if (relation == ">=") c.ok = value >= threshold;
    else throw Error("check " + name + ": unknown relation " + relation);
    rec_.checks.push_back(c);
    return rec_.checks.back();
}

void RunContext::slope(const std::string& name, const SlopeFit& f, double theory, int levels) {
    SlopeRow s;
    s.name = name;
    s.slope = f.defined ? f.slope : std::nan("");
    s.half_width = f.halfwidth;
    s.theory = theory;
    s.levels = levels;
    rec_.slopes.push_back(s);
}

void RunContext::detail(const std::string& text) {
    if (rec_.checks.empty()) return;
    std::string& d = rec_.checks.back().detail;
    if (!d.empty()) d += "; ";
    d += text;
}

void RunContext::stage(const std::string& name, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw Error("stage " + name + ": " + e.what());
    }
}

void RunContext::parallel(std::size_t count, const std::function<void(std::size_t)>& fn) const {
    const std::size_t workers = std::min<std::size_t>(std::size_t(std::max(cfg_.threads, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

namespace {

// Details are free text; keep them inside one CSV field.
std::string clean(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << text;
}

std::string record_header(const RunRecord& r) {
    return "# blab " + std::string(kBlabVersion) + " scenario=" + r.scenario + " config=" + r.config_hash +
           " seed=" + std::to_string(r.seed) + " modules=" + r.versions;
}

}  // namespace

void write_record(const RunRecord& r) {
    fs::create_directories(r.dir);
    std::ostringstream csv, txt, sl;
    const std::string head = record_header(r);
    csv << head << "\n" << "criterion,check,value,relation,threshold,status,control,detail\n";
    txt << head << "\n";
    for (const Check& c : r.checks) {
        csv << c.criterion << "," << c.name << "," << short_num(c.value) << "," << c.relation << ","
            << short_num(c.threshold) << "," << status_name(c.status()) << "," << (c.control ? 1 : 0) << ","
            << clean(c.detail) << "\n";
        txt << status_name(c.status()) << "  " << c.name << " = " << short_num(c.value) << " " << c.relation << " "
            << short_num(c.threshold);
        if (c.criterion) txt << "  [criterion " << c.criterion << "]";
        if (!c.detail.empty()) txt << "  (" << c.detail << ")";
        txt << "\n";
    }
    txt << "verdict: " << (r.passed() ? "PASS" : "FAIL") << "\n";
    sl << head << "\n" << "name,slope,half_width,theory,levels\n";
    for (const SlopeRow& s : r.slopes)
        sl << s.name << "," << short_num(s.slope) << "," << short_num(s.half_width) << "," << short_num(s.theory)
           << "," << s.levels << "\n";
    write_text((fs::path(r.dir) / "verdict.csv").string(), csv.str());
    write_text((fs::path(r.dir) / "verdict.txt").string(), txt.str());
    write_text((fs::path(r.dir) / "slopes.csv").string(), sl.str());
}

RunRecord read_record(const std::string& verdict_csv) {
    std::ifstream is(verdict_csv);
    if (!is) throw Error("cannot read " + verdict_csv);
    RunRecord r;
    r.dir = fs::path(verdict_csv).parent_path().string();
    std::string line;
    if (!std::getline(is, line) || line.rfind("# blab ", 0) != 0) throw Error(verdict_csv + ": not a verdict file");
    for (const std::string& tok : split(line, ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "scenario") r.scenario = v;
        else if (k == "config") r.config_hash = v;
        else if (k == "seed") r.seed = std::stoull(v);
    }
    const auto mod = line.find("modules=");
    if (mod != std::string::npos) r.versions = line.substr(mod + 8);
    std::getline(is, line);  // column names
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() < 8) throw Error(verdict_csv + ": malformed row");
        Check c;
        c.criterion = std::stoi(f[0]);
        c.name = f[1];
        c.value = std::stod(f[2]);
        c.relation = f[3];
        c.threshold = std::stod(f[4]);
        c.control = f[6] == "1";
        c.ok = f[5] == "PASS";
        c.detail = f[7];
        r.checks.push_back(c);
    }
    std::ifstream ss((fs::path(r.dir) / "slopes.csv").string());
    if (ss) {
        std::getline(ss, line);
        std::getline(ss, line);
        while (std::getline(ss, line)) {
            const auto f = split(line, ',');
            if (f.size() < 5) continue;
            r.slopes.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stoi(f[4])});
        }
    }
    return r;
}

RunRecord run(const ExperimentConfig& c) {
    validate(c);
    const Scenario& s = find_scenario(c.scenario);
    RunRecord r;
    r.scenario = c.scenario;
    r.config_hash = config_hash(c);
    r.versions = module_versions();
    r.seed = c.seed;
    r.dir = (fs::path(c.out) / c.scenario).string();
    fs::create_directories(r.dir);
    RunContext ctx(c, r);
    write_text(ctx.path("config.ini"), output_header(c) + "\n" + canonical(c));
    s.body(ctx);
    for (const char* f : {"verdict.csv", "verdict.txt", "slopes.csv"}) ctx.path(f);
    write_record(r);
    return r;
}

Report report(const std::vector<RunRecord>& records) {
    Report rep;
    std::ostringstream txt, csv, sl;
    const std::string head = "# blab " + std::string(kBlabVersion) + " report modules=" + module_versions();
    txt << head << "\n";
    csv << head << "\n" << "criterion,scenario,check,value,relation,threshold,status,config\n";
    sl << head << "\n" << "scenario,name,slope,half_width,theory,levels,config\n";
    int np = 0, nf = 0, nx = 0;
    if (!records.empty()) {
        char b[256];
        std::snprintf(b, sizeof b, "%-4s %-28s %-34s %14s %2s %12s  %s\n", "crit", "scenario", "check", "value", "",
                      "threshold", "status");
        txt << b;
    }
    for (const RunRecord& r : records) {
        for (const Check& c : r.checks) {
            const Status st = c.status();
            (st == Status::pass ? np : st == Status::fail ? nf : nx)++;
            char b[512];
            std::snprintf(b, sizeof b, "%-4s %-28s %-34s %14s %2s %12s  %s\n",
                          c.criterion ? std::to_string(c.criterion).c_str() : "-", r.scenario.c_str(),
                          c.name.c_str(), short_num(c.value).c_str(), c.relation.c_str(),
                          short_num(c.threshold).c_str(), status_name(st));
            txt << b;
            csv << c.criterion << "," << r.scenario << "," << c.name << "," << short_num(c.value) << ","
                << c.relation << "," << short_num(c.threshold) << "," << status_name(st) << "," << r.config_hash
                << "\n";
        }
        for (const SlopeRow& s : r.slopes)
            sl << r.scenario << "," << s.name << "," << short_num(s.slope) << "," << short_num(s.half_width) << ","
               << short_num(s.theory) << "," << s.levels << "," << r.config_hash << "\n";
    }
    bool any_slope = false;
    for (const RunRecord& r : records)
        for (const SlopeRow& s : r.slopes) {
            if (!any_slope) txt << "\nslopes (measured +- 95% half-width, theory)\n";
            any_slope = true;
            char b[256];
            std::snprintf(b, sizeof b, "  %-28s %-22s %8.4f +- %-8.4f  theory %.4f\n", r.scenario.c_str(),
                          s.name.c_str(), s.slope, s.half_width, s.theory);
            txt << b;
        }
    if (!records.empty())
        txt << "\n" << np << " pass, " << nf << " fail, " << nx << " expected-fail\n";
    rep.text = txt.str();
    rep.csv = csv.str();
    rep.slopes_csv = sl.str();
    return rep;
}

void write_report(const std::string& dir, const std::vector<RunRecord>& records) {
    fs::create_directories(dir);
    const Report r = report(records);
    write_text((fs::path(dir) / "report.txt").string(), r.text);
    write_text((fs::path(dir) / "report.csv").string(), r.csv);
    write_text((fs::path(dir) / "report_slopes.csv").string(), r.slopes_csv);
}

int exit_code(const std::vector<RunRecord>& records) {
    for (const RunRecord& r : records)
        if (!r.passed()) return 1;
    return 0;
}

}  // namespace blab
