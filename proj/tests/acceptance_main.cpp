// Acceptance suite: runs every criterion and prints one pass/fail line each.
// Exit code 0 iff all pass. Optional argv tokens filter by id or name.
#include <cstdio>
#include <string>
#include <vector>

#include "retrialq/validate.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> only;
    for (int i = 1; i < argc; ++i) only.emplace_back(argv[i]);
    const auto results = retrialq::run_validation(only, [](const retrialq::CriterionResult& r) {
        std::printf("[%s] %s %s (%.1fs): %s\n", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                    r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
    });
    if (results.empty()) {
        std::printf("no criteria matched the filter\n");
        return 2;
    }
    for (const auto& r : results)
        if (!r.pass) return 1;
    return 0;
}
