#include <string>
#include <vector>

#include "warpfield/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return warpfield::run_cli(args);
}
