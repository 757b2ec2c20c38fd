#include "lpselect/cli.hpp"

int main(int argc, char** argv) { return lpsel::run(argc, argv); }
