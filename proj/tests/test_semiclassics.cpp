#include <doctest.h>

TEST_SUITE("semiclassics") {}
