#include "hicops/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "hicops/binio.hpp"

namespace hicops {

namespace {

constexpr int kFactorialCap = 64;

double log10_factorial(int n) {
    n = std::min(n, kFactorialCap);
    double acc = 0.0;
    for (int i = 2; i <= n; ++i) acc += std::log10(static_cast<double>(i));
    return acc;
}

}  // namespace

double hyperscore(const ExperimentalSpectrum& query,
                  const std::vector<Fragment>& candidate_fragments,
                  double delta_f) {
    const auto& peaks = query.peaks;  // ascending m/z
    std::vector<bool> used(peaks.size(), false);
    int n_b = 0, n_y = 0;
    double i_b = 0.0, i_y = 0.0;
    for (const auto& frag : candidate_fragments) {
        // Closest unused peak within +-delta_f; ties toward lower m/z.
        auto lo = std::lower_bound(peaks.begin(), peaks.end(), frag.mz - delta_f,
                                   [](const Peak& p, double m) { return p.mz < m; });
        int best = -1;
        double best_diff = 0.0;
        for (auto it = lo; it != peaks.end() && it->mz <= frag.mz + delta_f; ++it) {
            const auto j = static_cast<std::size_t>(it - peaks.begin());
            if (used[j]) continue;
            const double diff = std::abs(static_cast<double>(it->mz) - frag.mz);
            if (best < 0 || diff < best_diff) {
                best = static_cast<int>(j);
                best_diff = diff;
            }
        }
        if (best < 0) continue;
        used[static_cast<std::size_t>(best)] = true;
        if (frag.kind == IonKind::B) {
            ++n_b;
            i_b += peaks[static_cast<std::size_t>(best)].intensity;
        } else {
            ++n_y;
            i_y += peaks[static_cast<std::size_t>(best)].intensity;
        }
    }
    return log10_factorial(n_b) + log10_factorial(n_y) +
           std::log10(i_b + i_y + 1.0);
}

void ScoreHistogram::add(double score) {
    auto b = static_cast<long>(std::floor(score / bin_width));
    if (b < 0) b = 0;
    if (b >= static_cast<long>(bins.size())) b = static_cast<long>(bins.size()) - 1;
    ++bins[static_cast<std::size_t>(b)];
}

std::uint64_t ScoreHistogram::total() const {
    std::uint64_t t = 0;
    for (auto b : bins) t += b;
    return t;
}

std::uint64_t PartialResult::sample_sum() const {
    std::uint64_t t = 0;
    for (int i = 0; i < sample_len; ++i) t += samples[static_cast<std::size_t>(i)];
    return t;
}

std::array<std::uint8_t, kPartialResultBytes> serialize_partial_result(
    const PartialResult& r) {
    std::vector<std::uint8_t> buf;
    buf.reserve(kPartialResultBytes);
    put_le<std::uint32_t>(buf, r.query_id);
    put_le<std::uint32_t>(buf, r.top_entry);
    put_le<float>(buf, r.top_score);
    put_le<std::uint16_t>(buf, r.hist_start_bin);
    put_le<std::uint8_t>(buf, r.sample_len);
    put_le<std::uint8_t>(buf, r.flags);
    for (auto s : r.samples) put_le<std::uint16_t>(buf, s);
    std::array<std::uint8_t, kPartialResultBytes> out{};
    std::copy(buf.begin(), buf.end(), out.begin());
    return out;
}

PartialResult deserialize_partial_result(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kPartialResultBytes)
        throw std::runtime_error("partial result record must be 256 bytes");
    std::size_t off = 0;
    PartialResult r;
    r.query_id = get_le<std::uint32_t>(bytes, off);
    r.top_entry = get_le<std::uint32_t>(bytes, off);
    r.top_score = get_le<float>(bytes, off);
    r.hist_start_bin = get_le<std::uint16_t>(bytes, off);
    r.sample_len = get_le<std::uint8_t>(bytes, off);
    r.flags = get_le<std::uint8_t>(bytes, off);
    for (auto& s : r.samples) s = get_le<std::uint16_t>(bytes, off);
    r.candidate_count = static_cast<std::uint32_t>(r.sample_sum());
    return r;
}

void sample_distribution(const ScoreHistogram& hist, int s, PartialResult& out) {
    const int nbins = static_cast<int>(hist.bins.size());
    s = std::min(s, kSampleSlots);
    if (hist.total() == 0) {
        out.hist_start_bin = 0;
        out.sample_len = 0;
        out.flags |= kFlagEmpty;
        return;
    }
    // Average index of the three most intense bins, ties toward the
    // lowest index, rounded.
    std::array<int, 3> top{-1, -1, -1};
    auto better = [&](int a, int b) {
        if (b < 0) return true;
        if (hist.bins[static_cast<std::size_t>(a)] !=
            hist.bins[static_cast<std::size_t>(b)])
            return hist.bins[static_cast<std::size_t>(a)] >
                   hist.bins[static_cast<std::size_t>(b)];
        return a < b;
    };
    for (int b = 0; b < nbins; ++b) {
        if (hist.bins[static_cast<std::size_t>(b)] == 0) continue;
        int cur = b;
        for (auto& t : top) {
            if (better(cur, t)) std::swap(cur, t);
        }
    }
    int nz = 0;
    double sum = 0;
    for (int t : top)
        if (t >= 0) { sum += t; ++nz; }
    const int mean_bin = static_cast<int>(std::lround(sum / nz));

    int start = mean_bin - s / 2;
    start = std::clamp(start, 0, nbins - s);
    out.hist_start_bin = static_cast<std::uint16_t>(start);
    out.sample_len = static_cast<std::uint8_t>(s);
    for (int i = 0; i < s; ++i) {
        std::uint32_t c = hist.bins[static_cast<std::size_t>(start + i)];
        if (c > 0xFFFF) {
            c = 0xFFFF;
            out.flags |= kFlagSaturated;
        }
        out.samples[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(c);
    }
}

std::vector<PartialResult> encode_full_histogram(const ScoreHistogram& hist,
                                                 const PartialResult& primary) {
    std::vector<PartialResult> out;
    const int nbins = static_cast<int>(hist.bins.size());
    int first = -1, last = -1;
    for (int b = 0; b < nbins; ++b) {
        if (hist.bins[static_cast<std::size_t>(b)] != 0) {
            if (first < 0) first = b;
            last = b;
        }
    }
    if (first < 0) {
        PartialResult r = primary;
        r.flags |= kFlagEmpty;
        r.sample_len = 0;
        out.push_back(r);
        return out;
    }
    bool emitted_primary = false;
    for (int start = first; start <= last; start += kSampleSlots) {
        const int len = std::min(kSampleSlots, last - start + 1);
        // Split counts over 65535 across repeated records so sums stay
        // exact.
        std::vector<std::uint32_t> remaining(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i)
            remaining[static_cast<std::size_t>(i)] =
                hist.bins[static_cast<std::size_t>(start + i)];
        bool more = true;
        while (more) {
            more = false;
            PartialResult r = primary;
            if (emitted_primary) {
                r.flags |= kFlagContinuation;
                r.top_entry = kNoEntry;
                r.top_score = 0.0f;
            }
            r.hist_start_bin = static_cast<std::uint16_t>(start);
            r.sample_len = static_cast<std::uint8_t>(len);
            r.samples.fill(0);
            bool any = false;
            for (int i = 0; i < len; ++i) {
                auto& rem = remaining[static_cast<std::size_t>(i)];
                const std::uint32_t take = std::min<std::uint32_t>(rem, 0xFFFF);
                r.samples[static_cast<std::size_t>(i)] =
                    static_cast<std::uint16_t>(take);
                rem -= take;
                if (take) any = true;
                if (rem) more = true;
            }
            if (any || !emitted_primary) {
                out.push_back(r);
                emitted_primary = true;
            }
        }
    }
    return out;
}

QueryResult search_query(const ExperimentalSpectrum& query,
                         const FragmentIonIndex& index,
                         const SearchConfig& cfg) {
    QueryResult res{.partial = {},
                    .overflow = {},
                    .top_hits = {},
                    .histogram = ScoreHistogram(cfg.histogram_bins,
                                                cfg.histogram_bin_width)};
    res.partial.query_id = query.spectrum_id;

    const CandidateRange range =
        precursor_filter(index, query.precursor_mass, cfg.delta_m);
    std::vector<float> peak_mz(query.peaks.size());
    for (std::size_t i = 0; i < query.peaks.size(); ++i)
        peak_mz[i] = query.peaks[i].mz;
    const auto counts = shared_peak_count(index, range, peak_mz, cfg.delta_f);
    res.precursor_candidates = range.size();
    for (auto c : counts) res.shared_ion_pairs += c;

    std::uint32_t scored = 0;
    for (std::uint32_t c = 0; c < range.size(); ++c) {
        if (counts[c] < static_cast<std::uint32_t>(cfg.min_shared_peaks)) continue;
        const auto& cand = index.spectra_by_mass[range.lo + c];
        const double score = hyperscore(query, cand.fragments, cfg.delta_f);
        const auto f32 = static_cast<float>(score);
        ++scored;
        res.histogram.add(static_cast<double>(f32));
        // Worker-local top-M; order by (score desc, global id asc) in
        // f32 so selection is partition-invariant.
        QueryHit hit{cand.entry.global_id, f32};
        auto pos = std::lower_bound(
            res.top_hits.begin(), res.top_hits.end(), hit,
            [](const QueryHit& a, const QueryHit& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.entry < b.entry;
            });
        if (pos != res.top_hits.end() ||
            res.top_hits.size() < static_cast<std::size_t>(cfg.top_m))
            res.top_hits.insert(pos, hit);
        if (res.top_hits.size() > static_cast<std::size_t>(cfg.top_m))
            res.top_hits.pop_back();
    }

    res.partial.candidate_count = scored;
    if (scored == 0) {
        res.partial.flags |= kFlagEmpty;
        return res;
    }
    res.partial.top_entry = res.top_hits.front().entry;
    res.partial.top_score = res.top_hits.front().score;
    res.partial.flags |= kFlagHeapLocal;

    if (cfg.sampling_enabled) {
        sample_distribution(res.histogram, cfg.sample_count, res.partial);
    } else {
        auto records = encode_full_histogram(res.histogram, res.partial);
        res.partial = records.front();
        res.overflow.assign(records.begin() + 1, records.end());
    }
    return res;
}

std::vector<QueryResult> search_batch(const SpectrumBatch& batch,
                                      const FragmentIonIndex& index,
                                      const SearchConfig& cfg) {
    std::vector<QueryResult> out;
    out.reserve(batch.spectra.size());
    for (const auto& q : batch.spectra) out.push_back(search_query(q, index, cfg));
    return out;
}

}  // namespace hicops
