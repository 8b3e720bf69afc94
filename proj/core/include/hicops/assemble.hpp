#ifndef HICOPS_ASSEMBLE_HPP
#define HICOPS_ASSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/digest.hpp"
#include "hicops/metrics.hpp"
#include "hicops/scoring.hpp"
#include "hicops/transport.hpp"

namespace hicops {

// Per-query global null distribution, summed over workers after shifting
// each sampled window back to its histogram offset.
struct AssembledDistribution {
    std::vector<std::uint64_t> bins;
    std::uint64_t total_n = 0;
    float g_max_global = 0.0f;
    std::uint32_t top_entry = kNoEntry;
    int origin_rank = -1;
    bool any_hits = false;
    std::uint8_t flags = 0;
};

// records: (rank, record) for one query across workers, continuations
// included. Throws on duplicate primary (query, rank) pairs.
AssembledDistribution assemble(
    const std::vector<std::pair<int, PartialResult>>& records, int nbins);

// Least-squares polynomial smoothing. Interior points use the standard
// symmetric window; edge points are fitted on their clipped one-sided
// window, which keeps polynomials of degree <= poly_order exact
// everywhere. Negative outputs clamp to 0; series shorter than the
// window are returned unsmoothed.
std::vector<double> savitzky_golay(const std::vector<std::uint64_t>& bins,
                                   int window = 9, int poly_order = 3);
std::vector<double> savitzky_golay(const std::vector<double>& series,
                                   int window = 9, int poly_order = 3);

// Line fitted to log10(survival count) vs score over bins strictly above
// the mode with survival >= 1. log10_norm converts fitted counts to
// survival probability.
struct TailFit {
    double w = 0.0;
    double b = 0.0;
    double log10_norm = 0.0;  // log10 of total smoothed mass
    bool ok = false;
};

TailFit tail_fit(const std::vector<double>& smoothed, double bin_width);

// Method-of-moments log-Weibull fit on the (smoothed) histogram.
struct GumbelFit {
    double mu = 0.0;
    double beta_scale = 0.0;
    bool ok = false;
    double survival(double x) const;
};

GumbelFit gumbel_fit(const std::vector<double>& smoothed, double bin_width);

inline constexpr double kEvalueUnavailable = -1.0;

double expect_value(const TailFit& fit, double g_max, std::uint64_t total_n);
double expect_value(const GumbelFit& fit, double g_max, std::uint64_t total_n);

// Worker r owns tag t iff t mod P == r.
std::vector<std::uint32_t> claim_tags(const std::vector<std::uint32_t>& tags,
                                      int rank, int P);

// 16-byte routed record: query_id u32, e_value f32, g_max f32, flags
// u32. Bits 0-7 of flags are result flags; bits 8-31 carry the
// candidate total (saturating).
struct RoutedRecord {
    std::uint32_t query_id = 0;
    float e_value = 0.0f;
    float g_max = 0.0f;
    std::uint32_t flags = 0;

    void set_candidate_total(std::uint64_t n);
    std::uint64_t candidate_total() const { return flags >> 8; }
    std::uint8_t result_flags() const { return static_cast<std::uint8_t>(flags); }
};

inline constexpr std::size_t kRoutedRecordBytes = 16;

std::vector<std::uint8_t> serialize_routed(const std::vector<RoutedRecord>& rs);
std::vector<RoutedRecord> deserialize_routed(
    const std::vector<std::uint8_t>& bytes);

struct PsmRow {
    std::uint32_t spectrum_id = 0;
    std::uint32_t scan = 0;
    std::string peptide;
    std::string mods;
    double calc_mass = 0.0;
    double precursor_mass = 0.0;
    int charge = 0;
    float hyperscore = 0.0f;
    double e_value = 0.0;
    std::uint64_t candidate_total = 0;
    int origin_rank = 0;
    std::uint32_t flags = 0;
};

std::string format_psm_row(const PsmRow& r);
std::string psm_header();

// Inputs superstep 4 needs besides the shared run directory.
struct AssemblyContext {
    std::filesystem::path results_dir;
    std::filesystem::path batches_dir;
    std::filesystem::path psms_dir;
    const std::vector<PeptideEntry>* local_entries = nullptr;
    const std::vector<std::string>* base_peptides = nullptr;
    const PtmList* ptms = nullptr;
};

// The full superstep: claim owned tags, assemble and fit each query,
// route e-values to origin ranks, barrier, write this rank's PSM rows.
void run_assembly(Transport& transport, const AssemblyContext& ctx,
                  const SearchConfig& cfg, FitMethod fit,
                  MetricsRecorder& metrics);

}  // namespace hicops

#endif
