#pragma once

#include <span>

namespace soilvox::parallel {

// Worker count used by data-parallel loops (OpenMP). n <= 0 keeps the default.
void set_threads(int n);
int threads();

// When set, reductions sum fixed-size blocks in block order so results do not
// depend on the worker count. Defaults to true.
void set_deterministic(bool on);
bool deterministic();

double sum(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace soilvox::parallel
