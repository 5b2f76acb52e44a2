#include "mmv/cli.hpp"

int main(int argc, char** argv) { return mmv::main_impl(argc, argv); }
