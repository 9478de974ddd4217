#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wqed {

/// Zero-padded discrete transform with kernel e^{+2πi·jk/n}:
///   X[j] = Σ_k x[k]·e^{+2πi·jk/n},  j = 0..n−1, n ≥ x.size().
/// A field component e^{−iνt} therefore lands at positive frequency ν, i.e.
/// above the carrier. Backed by FFTW; plans are cached per thread.
std::vector<std::complex<double>> transform_positive(std::span<const std::complex<double>> x,
                                                     std::size_t n);

/// Frequencies (cycles per unit time) of the bins of an n-point transform with
/// sample step dt, in ascending order, together with the bin permutation:
/// sorted[i] = bins[order[i]].
struct CenteredAxis {
    std::vector<double> frequency;
    std::vector<std::size_t> order;
};
CenteredAxis centered_axis(std::size_t n, double dt);

std::size_t next_power_of_two(std::size_t n);

} // namespace wqed
