#include <privcheck/cli.hpp>

int main(int argc, char** argv) { return privcheck::run_cli(argc, argv); }
