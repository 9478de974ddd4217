#include "wqed/fft.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace wqed {

namespace {

// Plan creation and destruction are not thread safe in FFTW; execution is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

class Plan {
public:
    explicit Plan(std::size_t n) : n_(n)
    {
        buffer_ = fftw_alloc_complex(n);
        if (!buffer_)
            throw std::bad_alloc();
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buffer_);
    }

    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buffer_); }
    void execute() { fftw_execute(plan_); }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan plan_ = nullptr;
};

Plan& cached_plan(std::size_t n)
{
    thread_local std::map<std::size_t, std::unique_ptr<Plan>> cache;
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<Plan>(n);
    return *slot;
}

} // namespace

std::vector<std::complex<double>> transform_positive(std::span<const std::complex<double>> x,
                                                     std::size_t n)
{
    if (n == 0 || n < x.size())
        throw std::invalid_argument("transform length must cover the input");
    auto& plan = cached_plan(n);
    auto* buf = plan.data();
    std::copy(x.begin(), x.end(), buf);
    std::fill(buf + x.size(), buf + n, std::complex<double>{});
    plan.execute();
    return std::vector<std::complex<double>>(buf, buf + n);
}

CenteredAxis centered_axis(std::size_t n, double dt)
{
    CenteredAxis axis;
    axis.frequency.resize(n);
    axis.order.resize(n);
    const double df = 1.0 / (static_cast<double>(n) * dt);
    // Bins n/2+1 .. n−1 are negative frequencies (for even n, bin n/2 is
    // reported as −n/2·df).
    const std::size_t negatives = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t bin = (i + n - negatives) % n;
        axis.order[i] = bin;
        const auto signed_bin = static_cast<long long>(i) - static_cast<long long>(negatives);
        axis.frequency[i] = static_cast<double>(signed_bin) * df;
    }
    return axis;
}

std::size_t next_power_of_two(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

} // namespace wqed
