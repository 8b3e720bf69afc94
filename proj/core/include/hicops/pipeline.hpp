#ifndef HICOPS_PIPELINE_HPP
#define HICOPS_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <unordered_map>
#include <vector>

#include "hicops/config.hpp"
#include "hicops/index.hpp"
#include "hicops/metrics.hpp"
#include "hicops/queues.hpp"
#include "hicops/scheduler.hpp"
#include "hicops/scoring.hpp"
#include "hicops/spectra.hpp"

namespace hicops {

// Intermediate result file "res_<tag>_<rank>.hrb": magic "HRES", tag
// u32, rank u32, count u32, then count 256-byte records.
void write_result_file(const std::filesystem::path& file, std::uint32_t tag,
                       std::uint32_t rank,
                       const std::vector<PartialResult>& records);

struct ResultFile {
    std::uint32_t tag = 0;
    std::uint32_t rank = 0;
    std::vector<PartialResult> records;
};

ResultFile read_result_file(const std::filesystem::path& file);

inline std::string result_file_name(std::uint32_t tag, std::uint32_t rank) {
    return "res_" + std::to_string(tag) + "_" + std::to_string(rank) + ".hrb";
}

// A reusable batch buffer circulating q_r -> R -> q_f -> I -> q_r.
struct BatchBuffer {
    SpectrumBatch batch;
    BatchDescriptor descriptor;
};

using BufferPtr = std::unique_ptr<BatchBuffer>;

struct BufferQueues {
    Channel<BufferPtr> q_r;
    Channel<BufferPtr> q_f;

    explicit BufferQueues(int buffers)
        : q_r(static_cast<std::size_t>(buffers)),
          q_f(static_cast<std::size_t>(buffers)) {
        for (int i = 0; i < buffers; ++i)
            q_r.push(std::make_unique<BatchBuffer>());
    }
};

enum class LoadStep {
    Loaded,     // one batch filled and pushed to q_f
    Preempted,  // descriptor returned to the reclaim stack
    Yielded,    // q_r empty, descriptor returned
    Exhausted,  // no descriptors left
    QueueFull,  // q_f full, nothing popped
};

// One iteration of the sub-task R loop (single-threaded; the live
// pipeline wraps this with locking). `preempt` reflects the scheduler
// revoking this lane.
LoadStep subtask_r_step(BatchIndex& index, BufferQueues& queues, bool preempt);

struct PipelineOutput {
    // Worker-local top-M heaps, keyed by query id.
    std::unordered_map<std::uint32_t, std::vector<QueryHit>> heaps;
    int batches_searched = 0;
    int results_written = 0;
};

// Runs sub-tasks R, I and K over the batch index against the local
// partition, writing one .hrb per (tag, rank) under results_dir.
PipelineOutput run_search_pipeline(const FragmentIonIndex& index,
                                   BatchIndex batches, const SearchConfig& cfg,
                                   const SchedulerConfig& sched_cfg, int rank,
                                   const std::filesystem::path& results_dir,
                                   MetricsRecorder& metrics);

}  // namespace hicops

#endif
