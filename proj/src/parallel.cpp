#include "soilvox/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <omp.h>

namespace soilvox::parallel {

namespace {

bool g_deterministic = true;
constexpr std::ptrdiff_t kBlock = 4096;

template <typename Term>
double reduce(std::ptrdiff_t n, Term term) {
    if (g_deterministic) {
        const std::ptrdiff_t blocks = (n + kBlock - 1) / kBlock;
        std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < blocks; ++b) {
            const std::ptrdiff_t lo = b * kBlock;
            const std::ptrdiff_t hi = std::min(n, lo + kBlock);
            double acc = 0.0;
            for (std::ptrdiff_t i = lo; i < hi; ++i) acc += term(i);
            partial[static_cast<std::size_t>(b)] = acc;
        }
        double total = 0.0;
        for (double p : partial) total += p;
        return total;
    }
    double total = 0.0;
#pragma omp parallel for reduction(+ : total) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) total += term(i);
    return total;
}

}  // namespace

void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

int threads() { return omp_get_max_threads(); }

void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }

double sum(std::span<const double> v) {
    return reduce(static_cast<std::ptrdiff_t>(v.size()),
                  [&](std::ptrdiff_t i) { return v[static_cast<std::size_t>(i)]; });
}

double dot(std::span<const double> a, std::span<const double> b) {
    return reduce(static_cast<std::ptrdiff_t>(a.size()), [&](std::ptrdiff_t i) {
        const auto k = static_cast<std::size_t>(i);
        return a[k] * b[k];
    });
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace soilvox::parallel
