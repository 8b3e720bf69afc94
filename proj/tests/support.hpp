#ifndef HICOPS_TESTS_SUPPORT_HPP
#define HICOPS_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/digest.hpp"
#include "hicops/spectra.hpp"

namespace testsup {

// Deterministic synthetic corpus: a FASTA whose tryptic peptides seed
// the MS2 queries, so most spectra have a true database match.
struct CorpusSpec {
    int n_proteins = 300;
    int protein_len = 480;
    int n_spectra = 2000;
    std::uint64_t seed = 7;
    int noise_peaks = 8;
    double precursor_jitter = 0.5;   // Da
    double fragment_jitter = 0.002;  // Da
};

struct Corpus {
    std::filesystem::path dir;
    std::filesystem::path fasta;
    std::filesystem::path ms2;
    hicops::DatabaseConfig db;
    // Entry index each spectrum was derived from (by spectrum order).
    std::vector<std::uint32_t> true_entry;
};

Corpus make_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

// The acceptance corpus (shared across criteria), built once per
// process under dir.
const Corpus& shared_corpus(const std::filesystem::path& dir);

// Fresh scratch directory under the system temp root; wiped first.
std::filesystem::path scratch_dir(const std::string& name);

// peptide/mods/e_value/hyperscore columns of all PSM TSVs in a
// directory, keyed by spectrum id.
struct PsmEntry {
    std::string peptide;
    std::string mods;
    double hyperscore = 0.0;
    double e_value = -1.0;
};
std::map<std::uint32_t, PsmEntry> read_psms(const std::filesystem::path& psms_dir);

// Concatenated, spectrum-id-sorted rows of all PSM TSVs (header
// stripped), for byte-level comparison across P.
std::string sorted_psm_blob(const std::filesystem::path& psms_dir);

std::string random_peptide(std::mt19937_64& rng, int min_len, int max_len);

}  // namespace testsup

#endif
