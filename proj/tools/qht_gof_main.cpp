#include <string>
#include <vector>

#include "qhtgof/cli.hpp"

int main(int argc, char** argv) {
    return qht::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
