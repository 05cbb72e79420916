#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "pmmm/runtime.hpp"

int main(int argc, char** argv) {
  pmmm::tune_allocator();
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
