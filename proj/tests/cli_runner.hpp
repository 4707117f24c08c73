#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "helpers.hpp"

#ifndef RCA_CLI_PATH
#error "RCA_CLI_PATH must name the rca binary"
#endif

namespace testutil {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs `rca <args>` through the shell from inside `dir`.
inline CliRun run_cli(const TempDir &dir, const std::string &args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.path().string() + "' && '" + RCA_CLI_PATH + "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = rca::topology::read_file(out);
    r.err = rca::topology::read_file(err);
    return r;
}

}  // namespace testutil
