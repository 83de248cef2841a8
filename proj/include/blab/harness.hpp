#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "blab/geometry.hpp"

namespace blab {

constexpr const char* kBlabVersion = "1.0.0";
// "geometry/1 wkb/1 ..." : bumped whenever a module changes its numerical output.
std::string module_versions();

struct GridSpec {
    int n = 1;
    double T = kTwoPi, L = kTwoPi;
    int Nt = 256, Nx = 256;
    SpacetimeGrid grid() const { return {n, T, L, Nt, Nx}; }
};

// minkowski | unit-density (-h dt^2 + dx^2 / h, h = 1 + amplitude sin x) |
// conformal (Omega^2 eta, Omega = 1 + amplitude sin x cos t) | boosted (velocity = amplitude)
struct MetricSpec {
    std::string name = "minkowski";
    double amplitude = 0.2;
    MetricModel model(int n) const;
};

// wkb | manufactured | null-plane | crossing-null | metric-oscillation | wave-map | gauge
struct FamilySpec {
    std::string kind = "wkb";
    double k = 1.0;          // initial phase wave number along x^1
    double amplitude = 1.0;  // amplitude scale of the oscillation
    double width = 2.0;      // Gaussian amplitude profile exp(-width (x - L/2)^2)
};

struct LadderSpec {
    double eps0 = 0.125, ratio = 0.5;
    int depth = 3;
    std::vector<double> values() const;
};

struct DictionarySpec {
    int cells_t = 3, cells_x = 4;
    double margin = 0.3;
    int bins = 32;  // n = 1: bins on S^1; n = 2: 16 x 32 latitude-longitude
};

struct ExperimentConfig {
    std::string scenario = "null-plane-wave-minkowski";
    GridSpec grid;
    MetricSpec metric;
    FamilySpec family;
    LadderSpec ladder;
    DictionarySpec dictionary;
    double delta1 = 5.0 / 6.0, delta2 = 0.8;
    std::map<std::string, double> tol;
    std::string out = "out";
    std::uint64_t seed = 1;
    int threads = 1;

    double tolerance(const std::string& key) const;  // throws ConfigError when missing
};

// INI text: [run] scenario out seed threads, [grid] n T L Nt Nx, [metric] name
// amplitude, [family] kind k amplitude width, [ladder] eps0 ratio depth,
// [dictionary] cells_t cells_x margin bins, [partition] delta1 delta2,
// [tolerances] any keys. Numbers accept a trailing "pi" ("2pi", "0.5pi").
// Unspecified keys take the scenario defaults; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Rejects unresolvable names, bad grids and exponents outside
// 1/2 < delta1 < 1, 1/(2 delta1) < delta2 < 1 (ConfigError).
void validate(const ExperimentConfig& c);
// Canonical key = value listing (sorted, full precision); the hash covers it.
std::string canonical(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);

enum class Status { pass, fail, expected_fail };
const char* status_name(Status s);

// One verdict line. Controls run a conclusion on a family that violates its
// hypothesis: a failing control is EXPECTED-FAIL and does not fail the run.
struct Check {
    int criterion = 0;
    std::string name;
    double value = 0.0;
    std::string relation;  // "<", "<=", ">", ">="
    double threshold = 0.0;
    bool ok = false;
    bool control = false;
    std::string detail;

    Status status() const { return ok ? Status::pass : control ? Status::expected_fail : Status::fail; }
};

// Measured slope against its theoretical exponent, with the 95% half-width.
struct SlopeRow {
    std::string name;
    double slope = 0.0, half_width = 0.0, theory = 0.0;
    int levels = 0;
};

struct RunRecord {
    std::string scenario, config_hash, versions;
    std::uint64_t seed = 0;
    std::string dir;
    std::vector<Check> checks;
    std::vector<SlopeRow> slopes;
    std::vector<std::string> files;  // relative to dir

    bool passed() const;  // every non-control check passes
};

// First line of every file the harness writes.
std::string output_header(const ExperimentConfig& c);

// Executes the scenario into <out>/<scenario>/ and writes verdict.csv and
// verdict.txt there. Module rejections are rethrown naming the failing stage.
RunRecord run(const ExperimentConfig& c);
RunRecord read_record(const std::string& verdict_csv);
void write_record(const RunRecord& r);

// Plain-text summary and CSV rows (criterion, scenario, check, value, relation,
// threshold, status, config hash); slopes go to a second CSV.
struct Report {
    std::string text, csv, slopes_csv;
};
Report report(const std::vector<RunRecord>& records);
void write_report(const std::string& dir, const std::vector<RunRecord>& records);
int exit_code(const std::vector<RunRecord>& records);  // 0 all non-control checks pass, 1 otherwise

// Stages driven by the CLI on the configured family. Each returns the files it
// wrote (relative to <out>/<scenario>/).
std::vector<std::string> stage_generate(const ExperimentConfig& c);
std::vector<std::string> stage_evolve(const ExperimentConfig& c);
std::vector<std::string> stage_hmeasure(const ExperimentConfig& c);
std::vector<std::string> stage_vlasov(const ExperimentConfig& c);

// Code-level scenario registry.
class RunContext;
struct Scenario {
    std::string name;
    std::string summary;
    std::vector<int> criteria;
    std::function<void(ExperimentConfig&)> defaults;
    std::function<void(RunContext&)> body;
};
const std::vector<Scenario>& scenarios();
const Scenario& find_scenario(const std::string& name);  // ConfigError when unknown
ExperimentConfig default_config(const std::string& scenario);

class RunContext {
public:
    RunContext(const ExperimentConfig& c, RunRecord& r);

    const ExperimentConfig& config() const { return cfg_; }
    std::string path(const std::string& file);  // registers the file and returns its full path
    const std::string& header() const { return header_; }
    const std::string& dir() const { return rec_.dir; }

    Check& check(int criterion, const std::string& name, double value, const std::string& relation, double threshold,
                 bool control = false);
    void slope(const std::string& name, const SlopeFit& f, double theory, int levels);
    void detail(const std::string& text);  // attaches to the last check

    // Runs fn, rethrowing module errors as "stage <name>: ...".
    void stage(const std::string& name, const std::function<void()>& fn);
    // Runs fn(i) for i in [0, count) on up to config().threads workers.
    void parallel(std::size_t count, const std::function<void(std::size_t)>& fn) const;

private:
    ExperimentConfig cfg_;
    RunRecord& rec_;
    std::string header_;
};

}  // namespace blab
