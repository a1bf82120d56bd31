#include <doctest.h>

TEST_SUITE("stats") {}
