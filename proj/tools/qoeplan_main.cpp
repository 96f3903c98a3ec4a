#include <string>
#include <vector>

#include "qoeplan/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qoeplan::run_cli(args);
}
