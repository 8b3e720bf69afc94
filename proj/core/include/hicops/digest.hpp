#ifndef HICOPS_DIGEST_HPP
#define HICOPS_DIGEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/fasta.hpp"

namespace hicops {

// A digested peptide variant: base sequence index plus the variable-PTM
// placement mask. global_id is the ordinal in the canonical full entry
// stream, identical on every worker.
struct PeptideEntry {
    std::uint32_t base_id = 0;
    std::uint64_t mod_mask = 0;
    double precursor_mass = 0.0;
    std::uint32_t global_id = 0;
};

inline constexpr std::uint32_t kNoEntry = 0xFFFFFFFFu;

// In-silico cleavage after K/R (not before P), up to missed_cleavages
// internal sites, deduplicated by sequence and filtered by length and
// mass range. Result is sorted lexicographically so base ids are stable.
std::vector<std::string> digest(const std::vector<FastaProtein>& proteins,
                                const DatabaseConfig& cfg);

// Every subset of applicable variable-PTM placements with popcount up to
// max_mods_per_peptide, re-filtered by mass range. Entries appear in
// base_id order, masks ascending as integers; global ids are assigned in
// this canonical order.
std::vector<PeptideEntry> expand_variants(
    const std::vector<std::string>& base_peptides, const DatabaseConfig& cfg);

}  // namespace hicops

#endif
