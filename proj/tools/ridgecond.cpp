#include <string>
#include <vector>

#include "ridgecond/cli/app.hpp"

int main(int argc, char** argv)
{
    return ridgecond::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
