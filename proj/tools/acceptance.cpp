// Runs the acceptance criteria and prints one line per criterion. Optional arguments select ids.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>
#include <string>

#include "criteria.hpp"

int main(int argc, char** argv) {
    std::set<int> ids;
    for (int k = 1; k < argc; ++k) {
        const int id = std::atoi(argv[k]);
        if (id < 1 || id > 12) {
            std::fprintf(stderr, "usage: %s [criterion id 1-12]...\n", argv[0]);
            return 2;
        }
        ids.insert(id);
    }
    try {
        int failed = 0;
        plab::criteria::run(ids, [&](const plab::criteria::Outcome& o) {
            std::printf("%s\n", plab::criteria::format_line(o).c_str());
            std::fflush(stdout);
            failed += !o.pass;
        });
        std::printf("%s\n", failed ? "acceptance: FAIL" : "acceptance: PASS");
        return failed ? 1 : 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: error: %s\n", e.what());
        return 1;
    }
}
