#ifndef HICOPS_PARTITION_HPP
#define HICOPS_PARTITION_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/digest.hpp"

namespace hicops {

// Mod Distance between two modification variants of one base peptide:
// 2 - a / max(len), where a is the length of the maximal unedited prefix
// plus the maximal unedited suffix. A position is edited when it is
// modified in one entry but not the other. Range [0, 2], 0 on identical
// masks.
double mod_distance(std::uint64_t mask_x, std::uint64_t mask_y,
                    std::size_t len_x, std::size_t len_y);

double mod_distance(const PeptideEntry& x, const PeptideEntry& y,
                    const std::vector<std::string>& base_peptides);

// Cluster entries by base peptide, order each cluster by Mod Distance
// from the unmodified entry (ties by mask value), concatenate in base_id
// order and scatter ordinal i to worker i mod P. With
// cfg.random_scatter, a seeded shuffle replaces the round-robin step.
// Deterministic for fixed (entries, cfg, P).
std::vector<std::vector<PeptideEntry>> partition(
    const std::vector<PeptideEntry>& entries,
    const std::vector<std::string>& base_peptides, const DatabaseConfig& cfg,
    int P);

// Versioned partition manifest, magic "HCP1": header (magic, P, rank,
// entry count) + fixed 24-byte records (base_id u32, global_id u32,
// mod_mask u64, precursor_mass f64), little-endian.
void write_manifest(const std::filesystem::path& file,
                    const std::vector<PeptideEntry>& entries, int P, int rank);

struct Manifest {
    int P = 0;
    int rank = 0;
    std::vector<PeptideEntry> entries;
};

Manifest read_manifest(const std::filesystem::path& file);

}  // namespace hicops

#endif
