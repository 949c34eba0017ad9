#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stakesim::cli
{

enum ExitCode : int
{
    kOk = 0,
    kUsage = 1,
    kConfig = 2,
    kRuntime = 3,
};

// Entry point shared by the stakesim binary and the tests.
int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace stakesim::cli
