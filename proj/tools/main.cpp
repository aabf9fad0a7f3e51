#include "opinion_audit/cli.hpp"

int main(int argc, char** argv) { return opinion_audit::cli_main(argc, argv); }
