#ifndef HICOPS_SPECTRA_HPP
#define HICOPS_SPECTRA_HPP

#include <cstdint>
#include <deque>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/fasta.hpp"  // ParseError

namespace hicops {

struct Peak {
    float mz = 0.0f;
    float intensity = 0.0f;
};

struct ExperimentalSpectrum {
    std::uint32_t spectrum_id = 0;  // global ordinal across input files
    std::uint32_t scan = 0;
    double precursor_mass = 0.0;  // neutral monoisotopic
    std::uint8_t charge = 1;
    std::vector<Peak> peaks;  // ascending m/z after preprocessing
};

// MS2 text: 'H' header lines ignored; "S <scan> <precursor_mz> <charge>"
// followed by "<mz> <intensity>" peak lines. Missing charge defaults to
// 2 (counted in warnings). Spectrum ids continue from first_id.
struct Ms2ParseResult {
    std::vector<ExperimentalSpectrum> spectra;
    int default_charge_warnings = 0;
};

Ms2ParseResult parse_ms2(std::istream& in, std::uint32_t first_id = 0);
Ms2ParseResult parse_ms2_file(const std::filesystem::path& path,
                              std::uint32_t first_id = 0);

// Scale intensities so the maximum is 100, keep the top_b_peaks most
// intense peaks (ties toward lower m/z), re-sort by m/z. Returns nullopt
// for a peakless spectrum (dropped upstream with a counter).
std::optional<ExperimentalSpectrum> preprocess(const ExperimentalSpectrum& s,
                                               const SearchConfig& cfg);

struct SpectrumBatch {
    std::uint32_t tag = 0;
    std::vector<ExperimentalSpectrum> spectra;
    std::string source_file;
};

// Batch sizes at most min(batch_cap, ceil(total/P)); order preserved.
std::vector<SpectrumBatch> make_batches(std::vector<ExperimentalSpectrum> spectra,
                                        int P, int batch_cap,
                                        const std::string& source_file = {});

struct BatchDescriptor {
    std::uint32_t tag = 0;
    std::uint32_t count = 0;
    std::filesystem::path file;
};

// Houses the pending queue plus the pointer stack that preempted reader
// lanes return descriptors to.
struct BatchIndex {
    std::deque<BatchDescriptor> pending;
    std::vector<BatchDescriptor> reclaim_stack;

    std::optional<BatchDescriptor> pop();
    void push_reclaim(BatchDescriptor d) { reclaim_stack.push_back(std::move(d)); }
    bool exhausted() const { return pending.empty() && reclaim_stack.empty(); }
};

// Writes one "batch_<tag>.msb" per batch (magic "HMSB") plus an index
// footer and a scans.tsv sidecar. Batches whose file already verifies
// are skipped; the returned skip count reflects that.
struct WriteResult {
    BatchIndex index;
    int written = 0;
    int skipped = 0;
};

WriteResult write_preprocessed(const std::vector<SpectrumBatch>& batches,
                               const std::filesystem::path& out_dir);

SpectrumBatch read_batch(const std::filesystem::path& file);

// Checks magic/version/count integrity without a full decode.
bool batch_file_valid(const std::filesystem::path& file, std::uint32_t tag,
                      std::uint32_t count);

// Rebuilds a BatchIndex from the persisted footer.
BatchIndex load_batch_index(const std::filesystem::path& dir);

// spectrum_id -> (scan, source file) written alongside the batches.
void write_scan_table(const std::vector<SpectrumBatch>& batches,
                      const std::filesystem::path& dir);
struct ScanInfo {
    std::uint32_t scan = 0;
    std::string source_file;
};
std::vector<std::pair<std::uint32_t, ScanInfo>> load_scan_table(
    const std::filesystem::path& dir);

}  // namespace hicops

#endif
