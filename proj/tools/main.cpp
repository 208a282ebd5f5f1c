#include "fracstep/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fracstep::cli_main(std::move(args));
}
