#include <doctest.h>

TEST_SUITE("modal") {}
