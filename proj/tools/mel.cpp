#include "mel/cli/dispatch.hpp"

int main(int argc, char** argv) { return mel::cli::dispatch(argc, argv); }
