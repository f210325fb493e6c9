// Acceptance gate: runs every check in the verification suite at full scale
// and prints one line per criterion.  Exit status is the number of failures,
// so a green run exits 0.

#include <cstdio>

#include "patree/verify.hpp"

int main() {
    patree::VerifyOptions options;  // full scale, fixed master seed
    const auto outcomes = patree::verify_all(options);

    int failures = 0;
    int index = 0;
    for (const patree::CheckOutcome& outcome : outcomes) {
        ++index;
        std::printf("[%s] %2d. %s: %s\n", outcome.pass ? "PASS" : "FAIL",
                    index, outcome.name.c_str(), outcome.detail.c_str());
        if (!outcome.pass) ++failures;
    }
    std::printf("%d of %d acceptance checks passed\n", index - failures,
                index);
    return failures;
}
