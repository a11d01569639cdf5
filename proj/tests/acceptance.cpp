// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//   acceptance [--fast] [--quiet]

#include <cstring>
#include <iostream>

#include "selfish/acceptance.hpp"

int main(int argc, char** argv)
{
    selfish::acceptance::Options opts;
    bool verbose = true;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--fast") == 0)
            opts.fast = true;
        else if (std::strcmp(argv[i], "--quiet") == 0)
            verbose = false;
        else {
            std::cerr << "usage: acceptance [--fast] [--quiet]\n";
            return 2;
        }
    }
    const auto results = selfish::acceptance::run_all(opts, std::cout, verbose);
    int failed = 0;
    for (const auto& r : results)
        failed += r.pass() ? 0 : 1;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
