#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "oscmap/errors.hpp"

namespace oscmap {

/// Uniform sampling grid: points lo + k*step for k = 0..count-1, where the
/// endpoint hi is included (count is rounded from the span).
struct UniformGrid {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.1;

    UniformGrid() = default;
    UniformGrid(double lo_, double hi_, double step_) : lo(lo_), hi(hi_), step(step_) {
        if (!(hi > lo) || !(step > 0.0))
            throw Error("invalid grid: need hi > lo and step > 0");
        if (intervals() < 1) throw Error("invalid grid: fewer than one step in span");
    }

    long long intervals() const { return std::llround((hi - lo) / step); }
    std::size_t size() const { return static_cast<std::size_t>(intervals()) + 1; }
    double at(std::size_t k) const { return lo + static_cast<double>(k) * step; }
};

/// Neumaier-compensated running sum; used wherever a deterministic,
/// order-fixed reduction is required.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

/// Smallest-magnitude angular difference a - b modulo 2*pi.
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// Cumulative integral of uniformly sampled values by composite Simpson
/// pairs; the first interval uses the 3-point Newton open-end formula.
/// Returns partial integrals at every sample point (starting at 0).
inline std::vector<double> cumulative_simpson(std::span<const double> f, double dt) {
    std::vector<double> out(f.size(), 0.0);
    if (f.size() < 2) return out;
    if (f.size() == 2) {
        out[1] = 0.5 * dt * (f[0] + f[1]);
        return out;
    }
    out[1] = dt / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    for (std::size_t k = 2; k < f.size(); ++k)
        out[k] = out[k - 2] + dt / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
    return out;
}

/// Composite Simpson over the whole sampled span (even interval count
/// required for the pure rule; a trailing odd interval is handled with the
/// 3-point closed Newton formula on the last two intervals reversed).
inline double simpson(std::span<const double> f, double dt) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    CompensatedSum acc;
    std::size_t pairs_end = (n % 2 == 1) ? n : n - 1;  // even #intervals in [0, pairs_end)
    for (std::size_t k = 2; k < pairs_end; k += 2)
        acc.add(dt / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]));
    if (n % 2 == 0)  // one interval left over
        acc.add(dt / 12.0 * (-f[n - 3] + 8.0 * f[n - 2] + 5.0 * f[n - 1]));
    return acc.value();
}

/// Worker count: min(hardware, OSCMAP_THREADS when set, job count).
inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OSCMAP_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Run fn(i) for i in [0, jobs) on a small worker pool. Jobs must be
/// independent; results should be written to disjoint slots so the output is
/// identical regardless of scheduling.
inline void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = worker_count(jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Uniformly sampled function with local 6-point (quintic) Lagrange
/// interpolation; used to replay sampled coefficient tracks through the
/// integrator without re-deriving them.
class SampledFunction {
public:
    SampledFunction(double t0, double dt, std::vector<double> values)
        : t0_(t0), dt_(dt), v_(std::move(values)) {
        if (v_.size() < 2 || !(dt_ > 0.0)) throw Error("sampled function needs >= 2 points");
    }

    double operator()(double t) const {
        const std::size_t n = v_.size();
        if (n < 6) return linear(t);
        double u = (t - t0_) / dt_;
        auto i = static_cast<long long>(std::floor(u));
        long long lo = std::clamp<long long>(i - 2, 0, static_cast<long long>(n) - 6);
        double acc = 0.0;
        for (long long j = lo; j < lo + 6; ++j) {
            double w = 1.0;
            for (long long k = lo; k < lo + 6; ++k)
                if (k != j) w *= (u - static_cast<double>(k)) / static_cast<double>(j - k);
            acc += w * v_[static_cast<std::size_t>(j)];
        }
        return acc;
    }

    double front_time() const { return t0_; }
    double back_time() const { return t0_ + dt_ * static_cast<double>(v_.size() - 1); }

private:
    double t0_, dt_;
    std::vector<double> v_;

    double linear(double t) const {
        double u = (t - t0_) / dt_;
        auto i = static_cast<long long>(std::floor(u));
        i = std::clamp<long long>(i, 0, static_cast<long long>(v_.size()) - 2);
        const double w = u - static_cast<double>(i);
        return (1.0 - w) * v_[static_cast<std::size_t>(i)] + w * v_[static_cast<std::size_t>(i) + 1];
    }
};

/// One-sided first derivative from the leading 7 samples of a uniform grid
/// (6th-order forward stencil).
inline double forward_derivative(std::span<const double> f, double dt) {
    if (f.size() < 7) throw Error("forward derivative needs 7 samples");
    return (-49.0 / 20.0 * f[0] + 6.0 * f[1] - 15.0 / 2.0 * f[2] + 20.0 / 3.0 * f[3] -
            15.0 / 4.0 * f[4] + 6.0 / 5.0 * f[5] - 1.0 / 6.0 * f[6]) /
           dt;
}

}  // namespace oscmap
