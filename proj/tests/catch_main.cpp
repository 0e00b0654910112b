// Compiles the amalgamated Catch2 v3 implementation (provides main) once.
#include <catch2/catch_amalgamated.cpp>
