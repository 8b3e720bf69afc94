#include "hicops/taskmap.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hicops {

void ClusterSpec::validate() const {
    if (shared_mem_bytes == 0 || numa_per_node <= 0 || cores_per_numa <= 0 ||
        sockets_per_node <= 0 || cores_per_socket <= 0 || nodes <= 0)
        throw std::runtime_error("cluster spec fields must all be positive");
}

ClusterSpec load_cluster_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open cluster spec: " + file.string());
    ClusterSpec spec;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("cluster spec line " +
                                     std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "lambda_bytes")
                spec.shared_mem_bytes = std::stoull(value);
            else if (key == "numa")
                spec.numa_per_node = std::stoi(value);
            else if (key == "cores_per_numa")
                spec.cores_per_numa = std::stoi(value);
            else if (key == "sockets")
                spec.sockets_per_node = std::stoi(value);
            else if (key == "cores_per_socket")
                spec.cores_per_socket = std::stoi(value);
            else if (key == "nodes")
                spec.nodes = std::stoi(value);
            else
                throw std::runtime_error("unknown cluster spec key: " + key);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("cluster spec line " + std::to_string(lineno) +
                                     ": bad value for " + key);
        }
    }
    spec.validate();
    return spec;
}

TaskMapping task_mapping(const ClusterSpec& spec, std::uint64_t database_size,
                         int P, std::uint64_t max_entries_per_task) {
    spec.validate();
    if (P <= 0) throw std::runtime_error("P must be positive");
    const double per_partition =
        static_cast<double>(database_size) / static_cast<double>(P);
    if (per_partition > 0.70 * static_cast<double>(spec.shared_mem_bytes))
        throw std::runtime_error("insufficient memory for database partition");

    TaskMapping m;
    m.bind_level = std::max(spec.numa_per_node, spec.sockets_per_node);
    m.cores_per_task = std::min(spec.cores_per_numa, spec.cores_per_socket);
    m.tasks_per_node = std::max(spec.numa_per_node, spec.sockets_per_node);
    m.bind_policy = "scatter";

    // Memory-bandwidth refinement: walk the proper factors of the
    // initial cores-per-task in descending order, splitting while each
    // factor is at least half the initial value.
    const int t_max = m.cores_per_task;
    int next_factor = t_max - 1;
    while (static_cast<double>(database_size) /
               static_cast<double>(m.tasks_per_node) >
           static_cast<double>(max_entries_per_task)) {
        while (next_factor > 0 && t_max % next_factor != 0) --next_factor;
        if (next_factor <= 0) break;
        const int n_poss = next_factor--;
        if (n_poss < (t_max + 1) / 2) break;
        m.tasks_per_node *= t_max / n_poss;
        m.cores_per_task = n_poss;
    }
    return m;
}

std::string format_mapping(const TaskMapping& m) {
    std::ostringstream os;
    os << "tasks_per_node=" << m.tasks_per_node << '\n'
       << "cores_per_task=" << m.cores_per_task << '\n'
       << "bind_level=" << m.bind_level << '\n'
       << "bind_policy=" << m.bind_policy << '\n';
    return os.str();
}

}  // namespace hicops
