#include "hicops/index.hpp"

#include <algorithm>

namespace hicops {

FragmentIonIndex build_index(const std::vector<PeptideEntry>& local_entries,
                             const std::vector<std::string>& base_peptides,
                             const PtmList& ptms) {
    FragmentIonIndex idx;
    idx.spectra_by_mass.reserve(local_entries.size());
    for (const auto& e : local_entries) {
        const std::string& seq = base_peptides[e.base_id];
        idx.spectra_by_mass.push_back({e, fragment_ions(seq, e.mod_mask, ptms)});
    }
    std::stable_sort(idx.spectra_by_mass.begin(), idx.spectra_by_mass.end(),
                     [](const TheoreticalSpectrum& a, const TheoreticalSpectrum& b) {
                         if (a.entry.precursor_mass != b.entry.precursor_mass)
                             return a.entry.precursor_mass < b.entry.precursor_mass;
                         return a.entry.global_id < b.entry.global_id;
                     });

    std::size_t total = 0;
    for (const auto& s : idx.spectra_by_mass) total += s.fragments.size();
    idx.fragment_array.reserve(total);
    for (std::uint32_t i = 0; i < idx.spectra_by_mass.size(); ++i)
        for (const auto& f : idx.spectra_by_mass[i].fragments)
            idx.fragment_array.push_back({f.mz, i, f.kind});
    std::stable_sort(idx.fragment_array.begin(), idx.fragment_array.end(),
                     [](const IndexedFragment& a, const IndexedFragment& b) {
                         return a.mz < b.mz;
                     });
    return idx;
}

CandidateRange precursor_filter(const FragmentIonIndex& index,
                                double query_mass, double delta_m) {
    auto lo = std::lower_bound(
        index.spectra_by_mass.begin(), index.spectra_by_mass.end(),
        query_mass - delta_m, [](const TheoreticalSpectrum& s, double m) {
            return s.entry.precursor_mass < m;
        });
    auto hi = std::upper_bound(
        lo, index.spectra_by_mass.end(), query_mass + delta_m,
        [](double m, const TheoreticalSpectrum& s) {
            return m < s.entry.precursor_mass;
        });
    return {static_cast<std::uint32_t>(lo - index.spectra_by_mass.begin()),
            static_cast<std::uint32_t>(hi - index.spectra_by_mass.begin())};
}

std::vector<std::uint32_t> shared_peak_count(
    const FragmentIonIndex& index, CandidateRange range,
    const std::vector<float>& query_peak_mz, double delta_f) {
    std::vector<std::uint32_t> counts(range.size(), 0);
    if (range.empty()) return counts;
    const auto& frags = index.fragment_array;
    for (float peak : query_peak_mz) {
        const double mz = peak;
        auto it = std::lower_bound(frags.begin(), frags.end(), mz - delta_f,
                                   [](const IndexedFragment& f, double m) {
                                       return f.mz < m;
                                   });
        for (; it != frags.end() && it->mz <= mz + delta_f; ++it) {
            if (it->local_ordinal >= range.lo && it->local_ordinal < range.hi)
                ++counts[it->local_ordinal - range.lo];
        }
    }
    return counts;
}

}  // namespace hicops
