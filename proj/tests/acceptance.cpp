// Acceptance suite: runs every registered scenario with its pinned defaults and
// prints one PASS/FAIL line per criterion. Per-check values go to
// <out>/report.txt and the per-scenario verdict files.
//
//   acceptance [OUT_DIR] [THREADS]

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <thread>

#include "blab/harness.hpp"

namespace {

const std::map<int, const char*> kTitles = {
    {1, "solver convergence order"},     {2, "energy identity"},
    {3, "support on the mass shell"},    {4, "parity of the H-measure"},
    {5, "propagation (Vlasov)"},         {6, "commutator regime rates"},
    {7, "null-form weak continuity"},    {8, "trilinear vanishing"},
    {9, "wave-map closure"},             {10, "elliptic gauge"},
    {11, "determinism"},
};

}  // namespace

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "acceptance_out";
    const int threads = argc > 2 ? std::atoi(argv[2]) : int(std::max(1u, std::thread::hardware_concurrency()));

    std::vector<blab::RunRecord> records;
    std::map<int, std::vector<std::string>> failures, errors;
    std::map<int, int> counted;
    for (const blab::Scenario& s : blab::scenarios()) {
        if (s.criteria.empty()) continue;
        blab::ExperimentConfig c = blab::default_config(s.name);
        c.out = out;
        c.threads = std::max(1, threads);
        std::fprintf(stderr, "running %s\n", s.name.c_str());
        try {
            records.push_back(blab::run(c));
        } catch (const std::exception& e) {
            for (int k : s.criteria) errors[k].push_back(s.name + ": " + e.what());
            continue;
        }
        for (const blab::Check& k : records.back().checks) {
            if (!k.criterion) continue;
            ++counted[k.criterion];
            if (k.status() == blab::Status::fail) failures[k.criterion].push_back(k.name);
        }
    }
    blab::write_report(out, records);

    int failed = 0;
    for (const auto& [k, title] : kTitles) {
        const bool ok = counted[k] > 0 && failures[k].empty() && errors[k].empty();
        failed += !ok;
        std::printf("%s  criterion %2d  %-28s %d checks", ok ? "PASS" : "FAIL", k, title, counted[k]);
        for (const auto& f : failures[k]) std::printf("  failed: %s", f.c_str());
        for (const auto& e : errors[k]) std::printf("  error: %s", e.c_str());
        if (counted[k] == 0 && errors[k].empty()) std::printf("  (no checks ran)");
        std::printf("\n");
    }
    std::printf("%d of %zu criteria pass; details in %s/report.txt\n", int(kTitles.size()) - failed, kTitles.size(),
                out.c_str());
    return failed ? 1 : 0;
}
