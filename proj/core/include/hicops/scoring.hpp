#ifndef HICOPS_SCORING_HPP
#define HICOPS_SCORING_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/index.hpp"
#include "hicops/spectra.hpp"

namespace hicops {

// Hyperscore: log10(nb!) + log10(ny!) + log10(Ib + Iy + 1) over one-to-one
// nearest-m/z fragment matches (fragments in ascending order claim the
// closest unused peak within +-delta_f, ties toward lower m/z).
// Factorial arguments cap at 64.
double hyperscore(const ExperimentalSpectrum& query,
                  const std::vector<Fragment>& candidate_fragments,
                  double delta_f);

// Per-query null distribution. Scores clamp into the last bin.
struct ScoreHistogram {
    std::vector<std::uint32_t> bins;
    double bin_width = 0.1;

    explicit ScoreHistogram(int nbins = 1024, double width = 0.1)
        : bins(static_cast<std::size_t>(nbins), 0), bin_width(width) {}
    void add(double score);
    std::uint64_t total() const;
};

// Result record flags.
inline constexpr std::uint8_t kFlagEmpty = 1u << 0;        // no candidates
inline constexpr std::uint8_t kFlagSaturated = 1u << 1;    // u16 clamp hit
inline constexpr std::uint8_t kFlagHeapLocal = 1u << 2;    // full heap on worker
inline constexpr std::uint8_t kFlagContinuation = 1u << 3; // extra histogram chunk
inline constexpr std::uint8_t kFlagNoFit = 1u << 4;        // e-value unavailable

inline constexpr int kSampleSlots = 120;
inline constexpr std::size_t kPartialResultBytes = 256;

// Per-query, per-partition search output. candidate_count stays local;
// on the 256-byte wire it is reconstructed as the sample sum (see
// docs/formats.md).
struct PartialResult {
    std::uint32_t query_id = 0;
    std::uint32_t top_entry = kNoEntry;  // global entry id
    float top_score = 0.0f;
    std::uint32_t candidate_count = 0;
    std::uint16_t hist_start_bin = 0;
    std::uint8_t sample_len = 0;
    std::uint8_t flags = 0;
    std::array<std::uint16_t, kSampleSlots> samples{};

    std::uint64_t sample_sum() const;
};

std::array<std::uint8_t, kPartialResultBytes> serialize_partial_result(
    const PartialResult& r);
PartialResult deserialize_partial_result(
    std::span<const std::uint8_t> bytes);

// Picks the contiguous `s`-bin window centered on the rounded average
// index of the three most intense bins (ties toward lower index),
// shifted inward at the array edges; tail bins fall outside the window
// first. Counts clamp to u16 with the saturation flag.
void sample_distribution(const ScoreHistogram& hist, int s, PartialResult& out);

// Lossless multi-record encoding of a full histogram (sampling
// disabled): the primary record plus continuation records covering every
// nonzero bin; counts above u16 split across repeats so the sum is exact.
std::vector<PartialResult> encode_full_histogram(const ScoreHistogram& hist,
                                                 const PartialResult& primary);

struct QueryHit {
    std::uint32_t entry = kNoEntry;  // global id
    float score = 0.0f;
};

struct QueryResult {
    PartialResult partial;                 // sampled or primary record
    std::vector<PartialResult> overflow;   // continuation records
    std::vector<QueryHit> top_hits;        // worker-local top-M, best first
    ScoreHistogram histogram;              // full, pre-sampling
    std::uint32_t precursor_candidates = 0;  // alpha contribution
    std::uint64_t shared_ion_pairs = 0;      // sigma contribution
};

// One query against the local index: precursor filter, shared-peak
// filter (>= min_shared_peaks), hyperscore survivors, top-M heap, fill
// histogram, emit records.
QueryResult search_query(const ExperimentalSpectrum& query,
                         const FragmentIonIndex& index,
                         const SearchConfig& cfg);

std::vector<QueryResult> search_batch(const SpectrumBatch& batch,
                                      const FragmentIonIndex& index,
                                      const SearchConfig& cfg);

}  // namespace hicops

#endif
