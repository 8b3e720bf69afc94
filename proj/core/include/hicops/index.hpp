#ifndef HICOPS_INDEX_HPP
#define HICOPS_INDEX_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hicops/chem.hpp"
#include "hicops/digest.hpp"

namespace hicops {

// A peptide entry with its generated b/y fragment list.
struct TheoreticalSpectrum {
    PeptideEntry entry;
    std::vector<Fragment> fragments;  // ascending m/z
};

struct IndexedFragment {
    double mz = 0.0;
    std::uint32_t local_ordinal = 0;  // index into spectra_by_mass
    IonKind kind = IonKind::B;
};

// Partition-local index: spectra sorted by precursor mass plus one
// globally sorted fragment array for shared-peak counting.
struct FragmentIonIndex {
    std::vector<TheoreticalSpectrum> spectra_by_mass;
    std::vector<IndexedFragment> fragment_array;

    std::size_t local_size() const { return spectra_by_mass.size(); }
};

// Generates fragments for every local entry and builds both sorted
// arrays. Entries of length < 2 never occur for real digests (min_len
// filters them); they are rejected here.
FragmentIonIndex build_index(const std::vector<PeptideEntry>& local_entries,
                             const std::vector<std::string>& base_peptides,
                             const PtmList& ptms);

// Maximal contiguous [lo, hi) of spectra_by_mass with
// |mass - query_mass| <= delta_m, by binary search.
struct CandidateRange {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    std::uint32_t size() const { return hi - lo; }
    bool empty() const { return lo == hi; }
};

CandidateRange precursor_filter(const FragmentIonIndex& index,
                                double query_mass, double delta_m);

// Per-candidate shared-peak counts for candidates in [range.lo,
// range.hi): every (query peak, fragment) pair within +-delta_f counts
// once. Result indexed by (candidate - range.lo).
std::vector<std::uint32_t> shared_peak_count(
    const FragmentIonIndex& index, CandidateRange range,
    const std::vector<float>& query_peak_mz, double delta_f);

}  // namespace hicops

#endif
