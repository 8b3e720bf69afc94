#ifndef HICOPS_DRIVER_HPP
#define HICOPS_DRIVER_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "hicops/config.hpp"
#include "hicops/metrics.hpp"
#include "hicops/transport.hpp"

namespace hicops {

// Fixed run directory layout shared by all ranks.
struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path parts;
    std::filesystem::path batches;
    std::filesystem::path results;
    std::filesystem::path psms;
    std::filesystem::path metrics;

    static RunPaths under(const std::filesystem::path& root);
    void create() const;
};

// The configured run directory, unless HICOPS_RUN_DIR overrides it.
std::filesystem::path resolve_run_dir(const RunConfig& cfg);

// FNV-1a over the file bytes; keys the input digests in the manifest.
std::uint64_t file_digest(const std::filesystem::path& file);

// Config snapshot plus input digests, written as root/manifest.txt.
void write_run_manifest(const RunConfig& cfg, const RunPaths& paths);

// One rank's pass over all four supersteps. Throws on failure; the
// caller owns metric flushing and cluster teardown.
void run_rank(const RunConfig& cfg, Transport& transport,
              const RunPaths& paths, MetricsRecorder& metrics);

// Whole-run orchestration over the configured transport. In-process
// mode drives P threads; process mode re-executes `self_exe` with the
// hidden worker arguments. Returns the process exit code; any rank
// failure tears the others down and yields nonzero.
int run_pipeline(const RunConfig& cfg,
                 const std::filesystem::path& self_exe = {});

// Entry point of a spawned worker process: loads the config snapshot
// from the run root and runs one rank over the socket transport.
int run_worker(const std::filesystem::path& run_root, int rank);

}  // namespace hicops

#endif
