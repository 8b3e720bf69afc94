#include "hicops/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hicops {

void MetricsRecorder::flush(const std::filesystem::path& metrics_dir) const {
    std::filesystem::create_directories(metrics_dir);
    {
        std::ofstream os(metrics_dir / ("timings_" + std::to_string(rank_) + ".tsv"),
                         std::ios::trunc);
        os << "rank\tsuperstep\twall\tio\tcomm\twait\tidle\n";
        char buf[256];
        for (const auto& t : timings_) {
            std::snprintf(buf, sizeof(buf), "%d\t%d\t%.9f\t%.9f\t%.9f\t%.9f\t%.9f\n",
                          t.rank, t.superstep, t.wall_seconds, t.io_seconds,
                          t.comm_seconds, t.wait_seconds,
                          t.idle_at_barrier_seconds);
            os << buf;
        }
    }
    {
        std::ofstream os(metrics_dir / ("sched_" + std::to_string(rank_) + ".tsv"),
                         std::ios::trunc);
        os << "timestamp\tt_wait\tt_cum\tt_fct\tlanes_r\tlanes_i\tregion\n";
        char buf[256];
        for (const auto& s : sched_) {
            std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f\t%d\t%d\t%d\n",
                          s.timestamp, s.t_wait, s.t_cum, s.t_fct, s.lanes_r,
                          s.lanes_i, s.region);
            os << buf;
        }
    }
    {
        std::ofstream os(metrics_dir / ("counters_" + std::to_string(rank_) + ".tsv"),
                         std::ios::trunc);
        os << "alpha\tmu\tsigma\tqueries\tdropped\n";
        os << counters_.precursor_candidates << '\t' << counters_.scored_candidates
           << '\t' << counters_.shared_ion_pairs << '\t' << counters_.queries
           << '\t' << counters_.dropped_spectra << '\n';
    }
}

std::vector<SuperstepTiming> load_timings(const std::filesystem::path& metrics_dir) {
    std::vector<SuperstepTiming> out;
    if (!std::filesystem::exists(metrics_dir)) return out;
    for (const auto& ent : std::filesystem::directory_iterator(metrics_dir)) {
        const auto name = ent.path().filename().string();
        if (name.rfind("timings_", 0) != 0) continue;
        std::ifstream in(ent.path());
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            SuperstepTiming t;
            std::istringstream ss(line);
            ss >> t.rank >> t.superstep >> t.wall_seconds >> t.io_seconds >>
                t.comm_seconds >> t.wait_seconds >> t.idle_at_barrier_seconds;
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.superstep != b.superstep) return a.superstep < b.superstep;
        return a.rank < b.rank;
    });
    return out;
}

OverheadReport compute_overheads(const std::vector<SuperstepTiming>& timings) {
    OverheadReport r;
    r.superstep_wall.assign(4, 0.0);
    double t3_max = 0.0, t3_sum = 0.0, t3_wait = 0.0, io = 0.0, comm = 0.0;
    double accounted = 0.0, wall_all = 0.0;
    int t3_ranks = 0;
    for (const auto& t : timings) {
        if (t.superstep >= 1 && t.superstep <= 4) {
            auto& w = r.superstep_wall[static_cast<std::size_t>(t.superstep - 1)];
            w = std::max(w, t.wall_seconds);
        }
        wall_all += t.wall_seconds;
        accounted += t.io_seconds + t.comm_seconds + t.wait_seconds +
                     t.idle_at_barrier_seconds;
        io += t.io_seconds;
        comm += t.comm_seconds;
        if (t.superstep == 3) {
            t3_max = std::max(t3_max, t.wall_seconds);
            t3_sum += t.wall_seconds;
            t3_wait += t.wait_seconds;
            ++t3_ranks;
        }
    }
    for (double w : r.superstep_wall) r.total_wall += w;
    if (t3_ranks > 0 && t3_max > 0.0) {
        const double t3_mean = t3_sum / t3_ranks;
        r.load_imbalance_fraction = (t3_max - t3_mean) / t3_max;
        r.sched_fraction = std::min(1.0, t3_wait / (t3_max * t3_ranks));
    }
    if (wall_all > 0.0) {
        r.io_fraction = std::min(1.0, io / wall_all);
        r.comm_fraction = std::min(1.0, comm / wall_all);
    }
    // Serial proxy: supersteps 1-2 dominated by full-stream phases.
    r.serial_proxy = r.superstep_wall[0] + r.superstep_wall[1];
    r.parallel_proxy = r.superstep_wall[2] + r.superstep_wall[3];
    r.unattributed = std::max(0.0, wall_all - accounted);
    return r;
}

std::string format_report(const OverheadReport& r) {
    std::ostringstream os;
    char buf[256];
    os << "superstep wall times (max over ranks)\n";
    for (std::size_t j = 0; j < r.superstep_wall.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "  T%zu  %12.6f s\n", j + 1,
                      r.superstep_wall[j]);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "  T_H %12.6f s\n", r.total_wall);
    os << buf;
    os << "overheads\n";
    std::snprintf(buf, sizeof(buf),
                  "  load imbalance %8.4f\n  comm           %8.4f\n"
                  "  io             %8.4f\n  scheduling     %8.4f\n",
                  r.load_imbalance_fraction, r.comm_fraction, r.io_fraction,
                  r.sched_fraction);
    os << buf;
    os << "key=value\n";
    std::snprintf(buf, sizeof(buf),
                  "total_wall=%.9f\nload_imbalance_fraction=%.9f\n"
                  "comm_fraction=%.9f\nio_fraction=%.9f\nsched_fraction=%.9f\n"
                  "serial_proxy=%.9f\nparallel_proxy=%.9f\nunattributed=%.9f\n",
                  r.total_wall, r.load_imbalance_fraction, r.comm_fraction,
                  r.io_fraction, r.sched_fraction, r.serial_proxy,
                  r.parallel_proxy, r.unattributed);
    os << buf;
    return os.str();
}

}  // namespace hicops
