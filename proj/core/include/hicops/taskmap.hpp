#ifndef HICOPS_TASKMAP_HPP
#define HICOPS_TASKMAP_HPP

#include <cstdint>
#include <filesystem>
#include <string>

namespace hicops {

// Node shape used to derive the per-node task layout. Read from a
// key=value file so tests never probe live hardware.
struct ClusterSpec {
    std::uint64_t shared_mem_bytes = 0;  // lambda
    int numa_per_node = 0;               // u
    int cores_per_numa = 0;              // c_u
    int sockets_per_node = 0;            // s
    int cores_per_socket = 0;            // c_s
    int nodes = 1;

    void validate() const;  // all fields positive
};

// Keys: lambda_bytes, numa, cores_per_numa, sockets, cores_per_socket,
// nodes. '#' comments and blank lines ignored.
ClusterSpec load_cluster_spec(const std::filesystem::path& file);

struct TaskMapping {
    int tasks_per_node = 0;   // t_n
    int cores_per_task = 0;   // t_c
    int bind_level = 0;       // t_bl
    std::string bind_policy = "scatter";
};

// Derives the per-node task layout. t_bl = t_n = max{u, s}, t_c =
// min{c_u, c_s}; then while database_size / t_n exceeds
// max_entries_per_task, t_c drops to the next descending proper factor
// n_poss of the original t_c and t_n scales by t_c_orig / n_poss,
// stopping once n_poss < t_c_orig / 2. Throws std::runtime_error
// ("insufficient memory") if database_size / P > 0.70 * lambda.
TaskMapping task_mapping(const ClusterSpec& spec, std::uint64_t database_size,
                         int P,
                         std::uint64_t max_entries_per_task = 48000000);

std::string format_mapping(const TaskMapping& m);

}  // namespace hicops

#endif
