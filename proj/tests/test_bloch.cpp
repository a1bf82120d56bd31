#include <doctest.h>

TEST_SUITE("bloch") {}
