#ifndef HICOPS_CONFIG_HPP
#define HICOPS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hicops/chem.hpp"

namespace hicops {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what, std::string key = {})
        : std::runtime_error(what), key(std::move(key)) {}
    std::string key;
};

// Search-time knobs shared by supersteps 2-4.
struct SearchConfig {
    double delta_m = 5.0;         // precursor tolerance, Da
    double delta_f = 0.02;        // fragment tolerance, Da
    int min_shared_peaks = 4;     // k
    int top_m = 10;               // heap capacity M
    int top_b_peaks = 100;        // preprocessing cap B
    int sample_count = 120;       // s
    int batch_cap = 10000;        // max spectra per batch
    int histogram_bins = 1024;
    double histogram_bin_width = 0.1;
    bool sampling_enabled = true;

    void validate() const;
};

// Database construction knobs for superstep 1.
struct DatabaseConfig {
    std::string enzyme = "trypsin";
    int missed_cleavages = 2;
    int min_len = 6;
    int max_len = 46;
    double min_mass = 500.0;
    double max_mass = 5000.0;
    PtmList ptms;
    int max_mods_per_peptide = 3;
    bool random_scatter = false;  // round-robin by default
    std::uint64_t scatter_seed = 0;

    void validate() const;
};

struct SchedulerConfig {
    double t_min = 0.05;   // seconds
    double t_max = 2.0;    // seconds
    double alpha = 0.5;
    double beta = 0.5;
    int buffers = 20;
    int threads = 0;       // 0 = auto
};

enum class FitMethod { Tail, Gumbel };
enum class TransportMode { InProcess, Process };

// Union of all module configs plus run-level settings; serialized into
// the run directory manifest for reproducibility.
struct RunConfig {
    DatabaseConfig db;
    SearchConfig search;
    SchedulerConfig sched;
    int partitions = 1;
    FitMethod fit = FitMethod::Tail;
    TransportMode transport = TransportMode::InProcess;
    std::string fasta_path;
    std::vector<std::string> ms2_paths;
    std::string run_dir = "run/default";
    std::uint64_t max_entries_per_task = 48000000;  // task-mapping loop guard
    bool verbose = false;

    // Applies one key=value pair. Throws ConfigError naming the key for
    // unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    // One key=value per line, '#' comments, blank lines ignored.
    static RunConfig load(const std::filesystem::path& file);
    void apply_file(const std::filesystem::path& file);

    // Canonical key=value serialization (manifest form).
    std::string serialize() const;

    void validate() const;
};

}  // namespace hicops

#endif
