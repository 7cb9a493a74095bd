#include <string>
#include <vector>

#include "gcsvr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gcsvr::run_cli(args);
}
