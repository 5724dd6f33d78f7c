#include "phonocard/cli.hpp"

int main(int argc, char** argv) {
    return phonocard::cli::run(argc, argv);
}
