#include <iostream>
#include <string>
#include <vector>

#include "stepscat/cli.hpp"

int main(int argc, char** argv) {
    return stepscat::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
