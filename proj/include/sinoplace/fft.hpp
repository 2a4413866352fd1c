#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "sinoplace/common.hpp"

namespace sinoplace {

/// Precomputed DFT plan for one length. Power-of-two lengths run an
/// iterative radix-2 transform; everything else goes through Bluestein's
/// chirp-z reduction onto the next power of two >= 2n-1, so arbitrary
/// (including prime) lengths are exact circular DFTs.
///
/// forward:  X[f] = sum_k x[k] e^{-2pi i fk/n}
/// inverse:  x[k] = (1/n) sum_f X[f] e^{+2pi i fk/n}
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n_ == 0) throw ParameterError("Fft: length must be positive");
        pow2_ = (n_ & (n_ - 1)) == 0;
        m_ = pow2_ ? n_ : next_pow2(2 * n_ - 1);
        init_pow2_tables(m_);
        if (!pow2_) init_bluestein();
    }

    std::size_t size() const { return n_; }

    void forward(std::complex<double>* x) const {
        if (n_ == 1) return;
        if (pow2_) {
            fft_pow2(x, false);
            return;
        }
        std::vector<std::complex<double>> a(m_, {0.0, 0.0});
        for (std::size_t k = 0; k < n_; ++k) a[k] = x[k] * chirp_[k];
        fft_pow2(a.data(), false);
        for (std::size_t j = 0; j < m_; ++j) a[j] *= chirp_fft_[j];
        fft_pow2(a.data(), true);
        const double scale = 1.0 / static_cast<double>(m_);
        for (std::size_t f = 0; f < n_; ++f) x[f] = chirp_[f] * a[f] * scale;
    }

    void inverse(std::complex<double>* x) const {
        for (std::size_t k = 0; k < n_; ++k) x[k] = std::conj(x[k]);
        forward(x);
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) x[k] = std::conj(x[k]) * scale;
    }

    void forward(std::vector<std::complex<double>>& x) const {
        check_len(x.size());
        forward(x.data());
    }
    void inverse(std::vector<std::complex<double>>& x) const {
        check_len(x.size());
        inverse(x.data());
    }

private:
    static std::size_t next_pow2(std::size_t v) {
        std::size_t p = 1;
        while (p < v) p <<= 1;
        return p;
    }

    void check_len(std::size_t got) const {
        if (got != n_) throw DimensionError("Fft: buffer length does not match plan");
    }

    void init_pow2_tables(std::size_t m) {
        bitrev_.assign(m, 0);
        std::size_t log2m = 0;
        while ((std::size_t{1} << log2m) < m) ++log2m;
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2m; ++b) r |= ((i >> b) & 1) << (log2m - 1 - b);
            bitrev_[i] = r;
        }
        tw_.resize(m / 2 + 1);
        for (std::size_t k = 0; k <= m / 2; ++k) {
            const double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(m);
            tw_[k] = {std::cos(ang), std::sin(ang)};
        }
    }

    void init_bluestein() {
        chirp_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            // k^2 mod 2n keeps the trig argument small for large lengths
            const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n_);
            const double ang = -kPi * static_cast<double>(k2) / static_cast<double>(n_);
            chirp_[k] = {std::cos(ang), std::sin(ang)};
        }
        std::vector<std::complex<double>> b(m_, {0.0, 0.0});
        b[0] = std::conj(chirp_[0]);
        for (std::size_t j = 1; j < n_; ++j) {
            b[j] = std::conj(chirp_[j]);
            b[m_ - j] = std::conj(chirp_[j]);
        }
        fft_pow2(b.data(), false);
        chirp_fft_ = std::move(b);
    }

    void fft_pow2(std::complex<double>* x, bool inv) const {
        const std::size_t m = m_;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = bitrev_[i];
            if (i < j) std::swap(x[i], x[j]);
        }
        for (std::size_t len = 2; len <= m; len <<= 1) {
            const std::size_t step = m / len;
            const std::size_t half = len / 2;
            for (std::size_t base = 0; base < m; base += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    std::complex<double> w = tw_[j * step];
                    if (inv) w = std::conj(w);
                    const std::complex<double> u = x[base + j];
                    const std::complex<double> v = x[base + j + half] * w;
                    x[base + j] = u + v;
                    x[base + j + half] = u - v;
                }
            }
        }
    }

    std::size_t n_;
    bool pow2_ = false;
    std::size_t m_ = 0;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> tw_;
    std::vector<std::complex<double>> chirp_;
    std::vector<std::complex<double>> chirp_fft_;
};

/// Shared plan registry; plans are immutable after construction.
inline const Fft& fft_plan(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<Fft>> plans;
    std::lock_guard lock(mutex);
    auto it = plans.find(n);
    if (it == plans.end()) it = plans.emplace(n, std::make_unique<Fft>(n)).first;
    return *it->second;
}

}  // namespace sinoplace
