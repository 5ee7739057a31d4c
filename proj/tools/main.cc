#include <iostream>

#include "coupon/cli.h"

int main(int argc, char** argv) {
  return coupon::run_cli(argc, argv, std::cout, std::cerr);
}
