#include "uwbsel/cli.hpp"

int main(int argc, char** argv) {
  return uwbsel::cli_main(argc, argv);
}
