#pragma once

#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "nlcd/grid.hpp"
#include "nlcd/kernel.hpp"

namespace nlcd {

enum class ConvPath { fft, direct };

namespace detail {
// FFTW planning is not thread-safe; execution on caller-owned buffers is.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}
} // namespace detail

/// Zero-padded linear convolution (J*f)_i = sum_j w_j f_{i-j} dx via FFT.
/// One instance is tied to a (kernel, field length) pair and owns its
/// buffers and plans, so distinct instances may run concurrently.
class FftConvolver {
public:
    FftConvolver(const DiscreteKernel& kernel, std::size_t n)
        : n_(n), dx_(kernel.dx), pad_(detail::next_pow2(n + 2 * kernel.half_width())) {
        const std::size_t nc = pad_ / 2 + 1;
        real_ = fftw_alloc_real(pad_);
        freq_ = fftw_alloc_complex(nc);
        kernel_hat_.resize(nc);
        {
            std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
            fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(pad_), real_, freq_, FFTW_ESTIMATE);
            inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(pad_), freq_, real_, FFTW_ESTIMATE);
        }
        if (fwd_ == nullptr || inv_ == nullptr) throw std::runtime_error("FftConvolver: planning failed");

        // circularly wrapped kernel; pad >= n + 2m keeps the convolution linear
        std::memset(real_, 0, pad_ * sizeof(double));
        auto m = static_cast<std::ptrdiff_t>(kernel.half_width());
        for (std::ptrdiff_t j = -m; j <= m; ++j) {
            std::size_t idx = static_cast<std::size_t>((j + static_cast<std::ptrdiff_t>(pad_)) %
                                                       static_cast<std::ptrdiff_t>(pad_));
            real_[idx] = kernel.weight(j);
        }
        fftw_execute(fwd_);
        for (std::size_t k = 0; k < nc; ++k) kernel_hat_[k] = {freq_[k][0], freq_[k][1]};
    }

    ~FftConvolver() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(freq_);
    }

    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    std::size_t length() const { return n_; }

    void apply(const std::vector<double>& in, std::vector<double>& out) {
        if (in.size() != n_) throw std::invalid_argument("FftConvolver: length mismatch");
        std::memcpy(real_, in.data(), n_ * sizeof(double));
        std::memset(real_ + n_, 0, (pad_ - n_) * sizeof(double));
        fftw_execute(fwd_);
        const std::size_t nc = pad_ / 2 + 1;
        const double scale = dx_ / static_cast<double>(pad_);
        for (std::size_t k = 0; k < nc; ++k) {
            std::complex<double> v{freq_[k][0], freq_[k][1]};
            v *= kernel_hat_[k] * scale;
            freq_[k][0] = v.real();
            freq_[k][1] = v.imag();
        }
        fftw_execute(inv_);
        out.resize(n_);
        std::memcpy(out.data(), real_, n_ * sizeof(double));
    }

private:
    std::size_t n_;
    double dx_;
    std::size_t pad_;
    double* real_ = nullptr;
    fftw_complex* freq_ = nullptr;
    std::vector<std::complex<double>> kernel_hat_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

inline void convolve_direct(const DiscreteKernel& k, const std::vector<double>& in,
                            std::vector<double>& out) {
    const auto n = static_cast<std::ptrdiff_t>(in.size());
    const auto m = static_cast<std::ptrdiff_t>(k.half_width());
    out.assign(in.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-m, i - n + 1);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(m, i);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += k.weight(j) * in[static_cast<std::size_t>(i - j)];
        out[static_cast<std::size_t>(i)] = acc * k.dx;
    }
}

/// (J*f) on f's grid with zero extension beyond the domain. The fft and
/// direct paths agree to roundoff; direct serves as the oracle.
inline Field convolve(const DiscreteKernel& k, const Field& f, ConvPath path = ConvPath::fft) {
    if (std::abs(k.dx - f.grid.dx) > 1e-12 * k.dx)
        throw std::invalid_argument("convolve: kernel and field spacing mismatch");
    Field out(f.grid);
    if (path == ConvPath::direct) {
        convolve_direct(k, f.values, out.values);
    } else {
        FftConvolver conv(k, f.grid.n);
        conv.apply(f.values, out.values);
    }
    out.nonneg = f.nonneg;
    return out;
}

} // namespace nlcd
