#include "hicops/driver.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "hicops/assemble.hpp"
#include "hicops/digest.hpp"
#include "hicops/fasta.hpp"
#include "hicops/index.hpp"
#include "hicops/partition.hpp"
#include "hicops/pipeline.hpp"
#include "hicops/spectra.hpp"

namespace hicops {

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

RunPaths RunPaths::under(const std::filesystem::path& root) {
    RunPaths p;
    p.root = root;
    p.parts = root / "parts";
    p.batches = root / "batches";
    p.results = root / "results";
    p.psms = root / "psms";
    p.metrics = root / "metrics";
    return p;
}

void RunPaths::create() const {
    for (const auto& d : {root, parts, batches, results, psms, metrics})
        std::filesystem::create_directories(d);
}

std::filesystem::path resolve_run_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("HICOPS_RUN_DIR"); env && *env)
        return env;
    return cfg.run_dir;
}

std::uint64_t file_digest(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for digest: " + file.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<std::uint8_t>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

void write_run_manifest(const RunConfig& cfg, const RunPaths& paths) {
    std::ofstream out(paths.root / "manifest.txt", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write run manifest");
    out << cfg.serialize();
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(file_digest(cfg.fasta_path)));
    out << "input.fasta_digest=" << hex << '\n';
    for (std::size_t i = 0; i < cfg.ms2_paths.size(); ++i) {
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(
                          file_digest(cfg.ms2_paths[i])));
        out << "input.ms2_digest." << i << '=' << hex << '\n';
    }
}

void run_rank(const RunConfig& cfg, Transport& transport,
              const RunPaths& paths, MetricsRecorder& metrics) {
    const int rank = transport.rank();
    const int P = transport.world_size();

    // Superstep 1: partial database construction. Every rank derives the
    // same canonical entry stream and keeps its own partition.
    double t0 = now_s();
    double io_s = 0.0;
    const auto proteins = parse_fasta_file(cfg.fasta_path);
    const auto base_peptides = digest(proteins, cfg.db);
    const auto entries = expand_variants(base_peptides, cfg.db);
    const auto parts = partition(entries, base_peptides, cfg.db, P);
    const auto& local = parts[static_cast<std::size_t>(rank)];
    {
        const double w0 = now_s();
        write_manifest(paths.parts / ("part_" + std::to_string(rank) + ".hcp"),
                       local, P, rank);
        io_s += now_s() - w0;
    }
    const auto index = build_index(local, base_peptides, cfg.db.ptms);
    double pre_barrier = now_s();
    transport.barrier();
    double t1 = now_s();
    metrics.add_timing({rank, 1, t1 - t0, io_s, 0.0, 0.0, t1 - pre_barrier});

    // Superstep 2: spectrum preprocessing, done once and shared through
    // the run directory.
    t0 = now_s();
    io_s = 0.0;
    if (rank == 0) {
        std::vector<ExperimentalSpectrum> all;
        std::vector<std::string> sources;
        std::vector<std::size_t> file_start;
        std::uint32_t next_id = 0;
        for (const auto& path : cfg.ms2_paths) {
            const double r0 = now_s();
            auto parsed = parse_ms2_file(path, next_id);
            io_s += now_s() - r0;
            file_start.push_back(all.size());
            sources.push_back(std::filesystem::path(path).filename().string());
            for (auto& s : parsed.spectra) {
                next_id = s.spectrum_id + 1;
                if (auto pp = preprocess(s, cfg.search))
                    all.push_back(std::move(*pp));
                else
                    ++metrics.counters().dropped_spectra;
            }
        }
        // Chunk size from the run-wide total, tags sequential across
        // source files.
        const std::size_t per_p = all.empty()
                                      ? 1
                                      : (all.size() + static_cast<std::size_t>(P) -
                                         1) / static_cast<std::size_t>(P);
        const int cap = static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(cfg.search.batch_cap),
            std::max<std::size_t>(1, per_p)));
        std::vector<SpectrumBatch> batches;
        file_start.push_back(all.size());
        for (std::size_t f = 0; f + 1 < file_start.size(); ++f) {
            std::vector<ExperimentalSpectrum> chunk(
                std::make_move_iterator(all.begin() +
                                        static_cast<std::ptrdiff_t>(file_start[f])),
                std::make_move_iterator(
                    all.begin() + static_cast<std::ptrdiff_t>(file_start[f + 1])));
            auto fb = make_batches(std::move(chunk), 1, cap, sources[f]);
            for (auto& b : fb) {
                b.tag = static_cast<std::uint32_t>(batches.size());
                batches.push_back(std::move(b));
            }
        }
        const double w0 = now_s();
        write_preprocessed(batches, paths.batches);
        write_scan_table(batches, paths.batches);
        io_s += now_s() - w0;
    }
    pre_barrier = now_s();
    transport.barrier();
    t1 = now_s();
    metrics.add_timing({rank, 2, t1 - t0, io_s, 0.0, 0.0, t1 - pre_barrier});

    // Superstep 3: the scheduled producer-consumer partial search.
    auto batch_index = load_batch_index(paths.batches);
    run_search_pipeline(index, std::move(batch_index), cfg.search, cfg.sched,
                        rank, paths.results, metrics);
    transport.barrier();

    // Superstep 4: assembly, statistics and PSM output.
    AssemblyContext actx;
    actx.results_dir = paths.results;
    actx.batches_dir = paths.batches;
    actx.psms_dir = paths.psms;
    actx.local_entries = &local;
    actx.base_peptides = &base_peptides;
    actx.ptms = &cfg.db.ptms;
    run_assembly(transport, actx, cfg.search, cfg.fit, metrics);
}

namespace {

int run_in_process(const RunConfig& cfg, const RunPaths& paths) {
    const int P = cfg.partitions;
    InProcessCluster cluster(P);
    std::atomic<bool> failed{false};
    std::mutex err_mu;
    std::string first_error;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(P));
    for (int r = 0; r < P; ++r) {
        threads.emplace_back([&, r] {
            MetricsRecorder metrics(r);
            try {
                run_rank(cfg, cluster.transport(r), paths, metrics);
            } catch (const std::exception& e) {
                {
                    std::lock_guard lk(err_mu);
                    if (first_error.empty())
                        first_error = "rank " + std::to_string(r) + ": " + e.what();
                }
                failed.store(true);
                cluster.abort();
            }
            try {
                metrics.flush(paths.metrics);
            } catch (const std::exception&) {
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failed.load()) {
        std::cerr << "run failed: " << first_error << '\n';
        return 1;
    }
    return 0;
}

int run_multi_process(const RunConfig& cfg, const RunPaths& paths,
                      const std::filesystem::path& self_exe) {
    if (self_exe.empty())
        throw std::runtime_error("process transport needs the executable path");
    const int P = cfg.partitions;
    {
        std::ofstream snap(paths.root / "config.snapshot", std::ios::trunc);
        snap << cfg.serialize();
    }
    std::filesystem::remove_all(paths.root / "sock");
    std::vector<pid_t> pids;
    for (int r = 0; r < P; ++r) {
        const pid_t pid = ::fork();
        if (pid < 0) throw std::runtime_error("fork failed");
        if (pid == 0) {
            const std::string exe = self_exe.string();
            const std::string root = paths.root.string();
            const std::string rank_s = std::to_string(r);
            ::execl(exe.c_str(), exe.c_str(), "__worker", "--run-root",
                    root.c_str(), "--rank", rank_s.c_str(),
                    static_cast<char*>(nullptr));
            std::perror("execl");
            std::_Exit(127);
        }
        pids.push_back(pid);
    }
    int exit_code = 0;
    std::vector<bool> done(pids.size(), false);
    for (std::size_t remaining = pids.size(); remaining > 0;) {
        int status = 0;
        const pid_t pid = ::wait(&status);
        if (pid < 0) break;
        bool known = false;
        for (std::size_t i = 0; i < pids.size(); ++i) {
            if (pids[i] == pid && !done[i]) {
                done[i] = true;
                --remaining;
                known = true;
            }
        }
        if (!known) continue;
        const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
        if (!ok && exit_code == 0) {
            exit_code = 1;
            // Fail fast: take the rest of the cluster down.
            for (std::size_t i = 0; i < pids.size(); ++i)
                if (!done[i]) ::kill(pids[i], SIGTERM);
        }
    }
    return exit_code;
}

}  // namespace

int run_pipeline(const RunConfig& cfg, const std::filesystem::path& self_exe) {
    cfg.validate();
    const auto paths = RunPaths::under(resolve_run_dir(cfg));
    paths.create();
    try {
        write_run_manifest(cfg, paths);
    } catch (const std::exception& e) {
        std::cerr << "run setup failed: " << e.what() << '\n';
        return 1;
    }
    if (cfg.transport == TransportMode::InProcess)
        return run_in_process(cfg, paths);
    return run_multi_process(cfg, paths, self_exe);
}

int run_worker(const std::filesystem::path& run_root, int rank) {
    auto cfg = RunConfig::load(run_root / "config.snapshot");
    const auto paths = RunPaths::under(run_root);
    MetricsRecorder metrics(rank);
    try {
        auto transport =
            make_process_transport(run_root / "sock", rank, cfg.partitions);
        run_rank(cfg, *transport, paths, metrics);
    } catch (const std::exception& e) {
        std::cerr << "worker rank " << rank << " failed: " << e.what() << '\n';
        try {
            metrics.flush(paths.metrics);
        } catch (const std::exception&) {
        }
        return 1;
    }
    metrics.flush(paths.metrics);
    return 0;
}

}  // namespace hicops
