#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sinoplace/common.hpp"
#include "sinoplace/descriptor.hpp"
#include "sinoplace/fft.hpp"
#include "sinoplace/parallel.hpp"

namespace sinoplace {

/// Circular cross-correlation over the offset axis, one value per shift.
struct CorrelationArray {
    std::vector<double> values;
};

/// Mutable-threshold similarity distance: the gap between the query's own
/// correlation peak and the query-candidate peak.
struct SimilarityDistance {
    double d = 0.0;
    double c_auto = 0.0;
    double c_qi = 0.0;
};

struct ScoredFrame {
    std::uint64_t index = 0;
    SimilarityDistance distance;
};

struct MatchResult {
    std::uint64_t best_index = 0;
    SimilarityDistance best_distance;
    std::vector<ScoredFrame> ranked;  // ascending by (d, index)
};

struct RetrievalConfig {
    std::uint32_t coarse_factor = 4;     // 1 disables the coarse pass
    std::uint32_t coarse_top_k = 10;
    std::uint32_t neighbor_window = 5;   // frames on each side of a coarse hit
    std::uint32_t exclusion_window = 90; // recent frames skipped for intra-session queries
    std::uint32_t keyframe_stride = 1;   // coarse pass samples every n-th frame
    std::uint32_t workers = 0;           // 0 = hardware default
    bool normalized = false;             // energy-normalized scores (experimental)

    void validate() const {
        if (coarse_factor < 1) throw ParameterError("RetrievalConfig: coarse_factor must be >= 1");
        if (coarse_top_k < 1) throw ParameterError("RetrievalConfig: coarse_top_k must be >= 1");
        if (keyframe_stride < 1) throw ParameterError("RetrievalConfig: keyframe_stride must be >= 1");
    }
};

/// Sums q_row * conj(c_row) over all angle rows and inverse-transforms once;
/// by linearity this equals summing the per-row inverse transforms, i.e. the
/// sum over angles of circular cross-correlations of the sinogram columns.
inline CorrelationArray cross_correlate(const RadarDescriptor& q, const RadarDescriptor& c) {
    q.validate();
    c.validate();
    if (q.n_theta != c.n_theta || q.n_l != c.n_l || q.resolution_tag != c.resolution_tag)
        throw DimensionError("cross_correlate: descriptor shapes differ");
    const std::uint32_t n = q.n_l;
    std::vector<std::complex<double>> acc(n, {0.0, 0.0});
    for (std::uint32_t j = 0; j < q.n_theta; ++j) {
        const std::complex<double>* qr = q.rows.row(j).data();
        const std::complex<double>* cr = c.rows.row(j).data();
        for (std::uint32_t k = 0; k < n; ++k) acc[k] += qr[k] * std::conj(cr[k]);
    }
    fft_plan(n).inverse(acc.data());
    CorrelationArray out;
    out.values.resize(n);
    double max_re = 0.0, max_im = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) {
        out.values[k] = acc[k].real();
        max_re = std::max(max_re, std::abs(acc[k].real()));
        max_im = std::max(max_im, std::abs(acc[k].imag()));
    }
    if (max_im > 1e-6 * max_re && max_re > 0.0)
        std::cerr << "cross_correlate: imaginary residue " << max_im << " exceeds 1e-6 of peak "
                  << max_re << "\n";
    return out;
}

namespace detail {

/// Parseval energy of the underlying sinogram, from the spectrum rows.
inline double descriptor_energy(const RadarDescriptor& d) {
    double e = 0.0;
    for (std::uint32_t j = 0; j < d.n_theta; ++j) {
        const std::complex<double>* row = d.rows.row(j).data();
        for (std::uint32_t k = 0; k < d.n_l; ++k) e += std::norm(row[k]);
    }
    return e / static_cast<double>(d.n_l);
}

}  // namespace detail

inline SimilarityDistance similarity_distance(const RadarDescriptor& q, const RadarDescriptor& c,
                                              bool normalized = false) {
    const CorrelationArray self = cross_correlate(q, q);
    const CorrelationArray cross = cross_correlate(q, c);
    SimilarityDistance s;
    s.c_auto = *std::max_element(self.values.begin(), self.values.end());
    s.c_qi = *std::max_element(cross.values.begin(), cross.values.end());
    if (normalized) {
        const double eq = detail::descriptor_energy(q);
        const double ec = detail::descriptor_energy(c);
        if (eq > 0.0 && ec > 0.0) {
            s.c_auto /= eq;
            s.c_qi /= (eq == ec) ? eq : std::sqrt(eq * ec);
        }
    }
    s.d = std::abs(s.c_auto - s.c_qi);
    return s;
}

/// Evaluates all circular lags of a conjugate-symmetric cross-power
/// spectrum given only its half spectrum, via precomputed weighted
/// cosine/sine tables. out[m] = (1/n) * sum_k P_k * e^{2*pi*i*k*m/n}.
class CorrelationTransform {
  public:
    explicit CorrelationTransform(std::uint32_t n) : n_(n), half_(n / 2 + 1) {
        if (n == 0) throw ParameterError("CorrelationTransform: length must be positive");
        cos_.resize(static_cast<std::size_t>(half_) * n_);
        sin_.resize(static_cast<std::size_t>(half_) * n_);
        for (std::uint32_t k = 0; k < half_; ++k) {
            const bool single = (k == 0) || (n_ % 2 == 0 && k == n_ / 2);
            const double w = (single ? 1.0 : 2.0) / static_cast<double>(n_);
            for (std::uint32_t m = 0; m < n_; ++m) {
                const std::uint64_t r = (static_cast<std::uint64_t>(k) * m) % n_;
                const double ang = kTwoPi * static_cast<double>(r) / static_cast<double>(n_);
                cos_[static_cast<std::size_t>(k) * n_ + m] = static_cast<float>(w * std::cos(ang));
                sin_[static_cast<std::size_t>(k) * n_ + m] = static_cast<float>(-w * std::sin(ang));
            }
        }
    }

    std::uint32_t length() const { return n_; }
    std::uint32_t half() const { return half_; }

    void lags(const double* p_re, const double* p_im, double* out) const {
        std::fill(out, out + n_, 0.0);
        for (std::uint32_t k = 0; k < half_; ++k) {
            const float* cr = cos_.data() + static_cast<std::size_t>(k) * n_;
            const float* sr = sin_.data() + static_cast<std::size_t>(k) * n_;
            const double a = p_re[k];
            const double b = p_im[k];
            for (std::uint32_t m = 0; m < n_; ++m) out[m] += a * cr[m] + b * sr[m];
        }
    }

  private:
    std::uint32_t n_, half_;
    std::vector<float> cos_, sin_;
};

/// Shared transform registry; transforms are immutable after construction.
inline const CorrelationTransform& correlation_plan(std::uint32_t n) {
    static std::mutex mutex;
    static std::unordered_map<std::uint32_t, std::unique_ptr<CorrelationTransform>> plans;
    std::lock_guard lock(mutex);
    auto it = plans.find(n);
    if (it == plans.end()) it = plans.emplace(n, std::make_unique<CorrelationTransform>(n)).first;
    return *it->second;
}

namespace detail {

/// Half-spectrum float32 packing, frequency-major so the per-frequency
/// angle dot products stream contiguously. Matches the store's 32-bit
/// precision; all accumulation downstream is 64-bit.
struct PackedQuery {
    std::uint32_t n_theta = 0, n_l = 0, half = 0;
    std::vector<float> re, im;  // [k * n_theta + j]
    double energy = 0.0;
};

inline double pack_rows(const RadarDescriptor& d, std::vector<float>& re, std::vector<float>& im) {
    const std::uint32_t T = d.n_theta;
    const std::uint32_t H = d.n_l / 2 + 1;
    const std::size_t base = re.size();
    re.resize(base + static_cast<std::size_t>(H) * T);
    im.resize(base + static_cast<std::size_t>(H) * T);
    double energy = 0.0;
    for (std::uint32_t k = 0; k < H; ++k) {
        const bool single = (k == 0) || (d.n_l % 2 == 0 && k == d.n_l / 2);
        const double w = (single ? 1.0 : 2.0) / static_cast<double>(d.n_l);
        float* pr = re.data() + base + static_cast<std::size_t>(k) * T;
        float* pi = im.data() + base + static_cast<std::size_t>(k) * T;
        for (std::uint32_t j = 0; j < T; ++j) {
            const std::complex<double> v = d.rows(j, k);
            const float fr = static_cast<float>(v.real());
            const float fi = static_cast<float>(v.imag());
            pr[j] = fr;
            pi[j] = fi;
            energy += w * (static_cast<double>(fr) * fr + static_cast<double>(fi) * fi);
        }
    }
    return energy;
}

inline PackedQuery pack_query(const RadarDescriptor& d) {
    PackedQuery p;
    p.n_theta = d.n_theta;
    p.n_l = d.n_l;
    p.half = d.n_l / 2 + 1;
    p.energy = pack_rows(d, p.re, p.im);
    return p;
}

/// Correlation peak between the packed query and one packed candidate.
inline double packed_peak(const PackedQuery& q, const float* cre, const float* cim,
                          const CorrelationTransform& xf, std::vector<double>& p_re,
                          std::vector<double>& p_im, std::vector<double>& lag) {
    const std::uint32_t T = q.n_theta;
    const std::uint32_t H = q.half;
    p_re.resize(H);
    p_im.resize(H);
    lag.resize(q.n_l);
    for (std::uint32_t k = 0; k < H; ++k) {
        const float* qr = q.re.data() + static_cast<std::size_t>(k) * T;
        const float* qi = q.im.data() + static_cast<std::size_t>(k) * T;
        const float* cr = cre + static_cast<std::size_t>(k) * T;
        const float* ci = cim + static_cast<std::size_t>(k) * T;
        double sr0 = 0.0, sr1 = 0.0, si0 = 0.0, si1 = 0.0;
        std::uint32_t j = 0;
        for (; j + 2 <= T; j += 2) {
            sr0 += static_cast<double>(qr[j]) * cr[j] + static_cast<double>(qi[j]) * ci[j];
            si0 += static_cast<double>(qi[j]) * cr[j] - static_cast<double>(qr[j]) * ci[j];
            sr1 += static_cast<double>(qr[j + 1]) * cr[j + 1] +
                   static_cast<double>(qi[j + 1]) * ci[j + 1];
            si1 += static_cast<double>(qi[j + 1]) * cr[j + 1] -
                   static_cast<double>(qr[j + 1]) * ci[j + 1];
        }
        if (j < T) {
            sr0 += static_cast<double>(qr[j]) * cr[j] + static_cast<double>(qi[j]) * ci[j];
            si0 += static_cast<double>(qi[j]) * cr[j] - static_cast<double>(qr[j]) * ci[j];
        }
        p_re[k] = sr0 + sr1;
        p_im[k] = si0 + si1;
    }
    xf.lags(p_re.data(), p_im.data(), lag.data());
    return *std::max_element(lag.begin(), lag.end());
}

}  // namespace detail

/// In-memory retrieval index over frame-aligned fine and coarse descriptor
/// banks. The coarse bank drives the candidate preselection, the fine bank
/// the final scores; both live as packed float32 half spectra.
class Retriever {
  public:
    explicit Retriever(RetrievalConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    void add_frame(const RadarDescriptor& fine, const RadarDescriptor& coarse) {
        fine.validate();
        fine_.append(fine);
        if (cfg_.coarse_factor > 1) {
            coarse.validate();
            if (coarse.n_l != downsampled_bins(fine.n_l, cfg_.coarse_factor))
                throw DimensionError(
                    "Retriever: coarse descriptor length does not match coarse_factor");
            coarse_.append(coarse);
        }
        ++frames_;
    }

    std::size_t frame_count() const { return frames_; }
    const RetrievalConfig& config() const { return cfg_; }

    MatchResult retrieve(const RadarDescriptor& q_fine, const RadarDescriptor& q_coarse,
                         std::optional<std::uint64_t> query_index = std::nullopt) const {
        const std::vector<std::uint64_t> admissible = admissible_frames(query_index);
        if (admissible.empty()) throw NoCandidateError("retrieve: no admissible candidate frames");
        if (cfg_.coarse_factor == 1) return score_and_rank(fine_, q_fine, admissible);

        std::vector<std::uint64_t> coarse_set;
        coarse_set.reserve(admissible.size() / cfg_.keyframe_stride + 1);
        for (std::uint64_t i : admissible)
            if (i % cfg_.keyframe_stride == 0) coarse_set.push_back(i);
        if (coarse_set.empty()) throw NoCandidateError("retrieve: keyframe stride left no candidates");

        const MatchResult coarse = score_and_rank(coarse_, q_coarse, coarse_set);
        const std::size_t keep = std::min<std::size_t>(cfg_.coarse_top_k, coarse.ranked.size());

        std::vector<std::uint64_t> fine_set;
        fine_set.reserve(keep * (2 * cfg_.neighbor_window + 1));
        for (std::size_t r = 0; r < keep; ++r) {
            const std::int64_t center = static_cast<std::int64_t>(coarse.ranked[r].index);
            const std::int64_t lo = center - static_cast<std::int64_t>(cfg_.neighbor_window);
            const std::int64_t hi = center + static_cast<std::int64_t>(cfg_.neighbor_window);
            for (std::int64_t i = lo; i <= hi; ++i) {
                if (i < 0 || i >= static_cast<std::int64_t>(frames_)) continue;
                if (!is_admissible(static_cast<std::uint64_t>(i), query_index)) continue;
                fine_set.push_back(static_cast<std::uint64_t>(i));
            }
        }
        std::sort(fine_set.begin(), fine_set.end());
        fine_set.erase(std::unique(fine_set.begin(), fine_set.end()), fine_set.end());
        return score_and_rank(fine_, q_fine, fine_set);
    }

    MatchResult retrieve_exhaustive(const RadarDescriptor& q_fine,
                                    std::optional<std::uint64_t> query_index = std::nullopt) const {
        const std::vector<std::uint64_t> admissible = admissible_frames(query_index);
        if (admissible.empty())
            throw NoCandidateError("retrieve_exhaustive: no admissible candidate frames");
        return score_and_rank(fine_, q_fine, admissible);
    }

  private:
    struct Bank {
        std::uint32_t n_theta = 0, n_l = 0, half = 0;
        std::size_t stride = 0;
        std::vector<float> re, im;
        std::vector<double> energy;

        void append(const RadarDescriptor& d) {
            if (n_theta == 0) {
                n_theta = d.n_theta;
                n_l = d.n_l;
                half = d.n_l / 2 + 1;
                stride = static_cast<std::size_t>(half) * n_theta;
            } else if (d.n_theta != n_theta || d.n_l != n_l) {
                throw DimensionError("Retriever: frame shape differs from earlier frames");
            }
            energy.push_back(detail::pack_rows(d, re, im));
        }
    };

    bool is_admissible(std::uint64_t i, std::optional<std::uint64_t> query_index) const {
        if (!query_index) return true;
        const std::int64_t delta =
            static_cast<std::int64_t>(i) - static_cast<std::int64_t>(*query_index);
        return std::llabs(delta) > static_cast<std::int64_t>(cfg_.exclusion_window);
    }

    std::vector<std::uint64_t> admissible_frames(std::optional<std::uint64_t> query_index) const {
        std::vector<std::uint64_t> out;
        out.reserve(frames_);
        for (std::uint64_t i = 0; i < frames_; ++i)
            if (is_admissible(i, query_index)) out.push_back(i);
        return out;
    }

    MatchResult score_and_rank(const Bank& bank, const RadarDescriptor& query,
                               const std::vector<std::uint64_t>& candidates) const {
        query.validate();
        if (query.n_theta != bank.n_theta || query.n_l != bank.n_l)
            throw DimensionError("retrieve: query shape does not match the store");
        const detail::PackedQuery q = detail::pack_query(query);
        const CorrelationTransform& xf = correlation_plan(bank.n_l);

        std::vector<double> s_re, s_im, s_lag;
        const double c_auto = detail::packed_peak(q, q.re.data(), q.im.data(), xf, s_re, s_im, s_lag);

        std::vector<ScoredFrame> scored(candidates.size());
        const std::uint32_t workers = cfg_.workers ? cfg_.workers : default_workers();
        parallel_for(candidates.size(), workers, [&](std::size_t idx) {
            static thread_local std::vector<double> p_re, p_im, lag;
            const std::uint64_t frame = candidates[idx];
            const float* cre = bank.re.data() + frame * bank.stride;
            const float* cim = bank.im.data() + frame * bank.stride;
            SimilarityDistance s;
            s.c_auto = c_auto;
            s.c_qi = detail::packed_peak(q, cre, cim, xf, p_re, p_im, lag);
            if (cfg_.normalized) {
                const double ec = bank.energy[frame];
                if (q.energy > 0.0 && ec > 0.0) {
                    s.c_auto /= q.energy;
                    s.c_qi /= (q.energy == ec) ? q.energy : std::sqrt(q.energy * ec);
                }
            }
            s.d = std::abs(s.c_auto - s.c_qi);
            scored[idx] = {frame, s};
        });

        std::sort(scored.begin(), scored.end(), [](const ScoredFrame& a, const ScoredFrame& b) {
            if (a.distance.d != b.distance.d) return a.distance.d < b.distance.d;
            return a.index < b.index;
        });
        MatchResult result;
        result.ranked = std::move(scored);
        result.best_index = result.ranked.front().index;
        result.best_distance = result.ranked.front().distance;
        return result;
    }

    RetrievalConfig cfg_;
    std::size_t frames_ = 0;
    Bank fine_, coarse_;
};

/// Store-level convenience wrapper over Retriever.
inline MatchResult retrieve(const RadarDescriptor& q_fine, const RadarDescriptor& q_coarse,
                            const DescriptorStore& db_fine, const DescriptorStore& db_coarse,
                            const RetrievalConfig& cfg = {},
                            std::optional<std::uint64_t> query_index = std::nullopt) {
    cfg.validate();
    const bool use_coarse = cfg.coarse_factor > 1;
    if (use_coarse && db_fine.frames.size() != db_coarse.frames.size())
        throw DimensionError("retrieve: fine and coarse stores are not frame-aligned");
    Retriever r(cfg);
    for (std::size_t i = 0; i < db_fine.frames.size(); ++i)
        r.add_frame(db_fine.frames[i], use_coarse ? db_coarse.frames[i] : db_fine.frames[i]);
    return r.retrieve(q_fine, q_coarse, query_index);
}

inline MatchResult retrieve_exhaustive(const RadarDescriptor& q_fine, const DescriptorStore& db_fine,
                                       const RetrievalConfig& cfg = {},
                                       std::optional<std::uint64_t> query_index = std::nullopt) {
    RetrievalConfig flat = cfg;
    flat.coarse_factor = 1;
    flat.validate();
    Retriever r(flat);
    for (const RadarDescriptor& d : db_fine.frames) r.add_frame(d, d);
    return r.retrieve_exhaustive(q_fine, query_index);
}

}  // namespace sinoplace
