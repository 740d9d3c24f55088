#include <iostream>

#include "nordstrom_verify/criteria.hpp"

int main() { return acceptance::run_all(std::cout) == 0 ? 0 : 1; }
