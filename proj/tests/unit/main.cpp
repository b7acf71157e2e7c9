#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "erp/parallel.hpp"

int main(int argc, char** argv) {
    erp::tune_allocator();
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
