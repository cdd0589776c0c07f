#include "medforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return medforge::cli::run(std::move(args));
}
