#include <vector>
#include <string>

#include "hill/cli.hpp"

int main(int argc, char** argv) {
    return hill::run(std::vector<std::string>(argv + 1, argv + argc));
}
