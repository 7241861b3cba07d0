// Runs acceptance criteria 1-12 and prints one PASS/FAIL line per criterion.
// Exit status 0 iff every criterion passes.

#include <cstdio>
#include <string>
#include <exception>

#include "suites.hpp"

int main(int argc, char** argv) {
    itpl::suites::Options opt;
    opt.data_dir = ITPL_DATA_DIR;
    const bool verbose = argc > 1 && std::string(argv[1]) == "-v";
    int failed = 0;
    for (int k = 1; k <= itpl::suites::kCriteria; ++k) {
        itpl::suites::Outcome o;
        try {
            o = itpl::suites::run_criterion(k, opt);
        } catch (const std::exception& e) {
            std::printf("FAIL %2d %s\n", k, e.what());
            ++failed;
            continue;
        }
        const bool ok = o.pass();
        failed += !ok;
        // Worst check relative to its threshold.
        const itpl::suites::Check* worst = nullptr;
        for (const auto& c : o.checks) {
            if (!worst || (!c.pass && worst->pass) ||
                (c.pass == worst->pass && c.residual * worst->threshold > worst->residual * c.threshold)) {
                worst = &c;
            }
        }
        std::printf("%s %2d %s: %zu checks, %.1f s", ok ? "PASS" : "FAIL", k, o.title.c_str(), o.checks.size(),
                    o.seconds);
        if (o.time_limit > 0) std::printf(" (limit %.0f s)", o.time_limit);
        if (o.instance_limit > 0) std::printf(" (slowest instance %.1f s, limit %.0f s)", o.slowest_instance, o.instance_limit);
        if (o.skipped) std::printf(", skipped: %s", o.note.c_str());
        if (worst) std::printf("; worst %s: %.2e vs %.0e", worst->label.c_str(), worst->residual, worst->threshold);
        std::printf("\n");
        if (verbose || !ok) {
            for (const auto& c : o.checks) {
                if (verbose || !c.pass) {
                    std::printf("    %s %s: %.3e vs %.0e\n", c.pass ? "ok  " : "FAIL", c.label.c_str(), c.residual,
                                c.threshold);
                }
            }
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
