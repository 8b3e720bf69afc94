#ifndef HICOPS_METRICS_HPP
#define HICOPS_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hicops {

// Per-rank, per-superstep wall time with attributed components.
struct SuperstepTiming {
    int rank = 0;
    int superstep = 0;  // 1..4
    double wall_seconds = 0.0;
    double io_seconds = 0.0;
    double comm_seconds = 0.0;
    double wait_seconds = 0.0;  // scheduling (q_f waits)
    double idle_at_barrier_seconds = 0.0;
};

// Filtered-candidate counters summed per rank.
struct SearchCounters {
    std::uint64_t precursor_candidates = 0;  // alpha
    std::uint64_t scored_candidates = 0;     // mu
    std::uint64_t shared_ion_pairs = 0;      // sigma
    std::uint64_t queries = 0;
    std::uint64_t dropped_spectra = 0;
};

struct SchedSample {
    double timestamp = 0.0;
    double t_wait = 0.0;
    double t_cum = 0.0;
    double t_fct = 0.0;
    int lanes_r = 0;
    int lanes_i = 0;
    int region = 1;  // 1..3
};

// Collects one rank's timings, counters and the t_wait time series, and
// flushes them as TSVs under <run>/metrics/.
class MetricsRecorder {
  public:
    explicit MetricsRecorder(int rank) : rank_(rank) {}

    void add_timing(SuperstepTiming t) { timings_.push_back(t); }
    SearchCounters& counters() { return counters_; }
    void add_sched_sample(const SchedSample& s) { sched_.push_back(s); }

    void flush(const std::filesystem::path& metrics_dir) const;

    const std::vector<SuperstepTiming>& timings() const { return timings_; }
    const std::vector<SchedSample>& sched_samples() const { return sched_; }
    int rank() const { return rank_; }

  private:
    int rank_;
    std::vector<SuperstepTiming> timings_;
    SearchCounters counters_;
    std::vector<SchedSample> sched_;
};

struct OverheadReport {
    double load_imbalance_fraction = 0.0;  // (max T3 - mean T3) / max T3
    double comm_fraction = 0.0;
    double io_fraction = 0.0;
    double sched_fraction = 0.0;  // sum t_wait / T3
    double total_wall = 0.0;      // sum over supersteps of max-over-ranks
    double serial_proxy = 0.0;
    double parallel_proxy = 0.0;
    double unattributed = 0.0;    // residual wall minus accounted components
    std::vector<double> superstep_wall;  // [4], max over ranks
};

// Reads every rank's timing TSV back and aggregates.
std::vector<SuperstepTiming> load_timings(const std::filesystem::path& metrics_dir);
OverheadReport compute_overheads(const std::vector<SuperstepTiming>& timings);

// Aligned text plus a machine-readable key=value block.
std::string format_report(const OverheadReport& r);

}  // namespace hicops

#endif
