#include "hicops/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "hicops/binio.hpp"

namespace hicops {

namespace {
constexpr char kResultMagic[4] = {'H', 'R', 'E', 'S'};
}

void write_result_file(const std::filesystem::path& file, std::uint32_t tag,
                       std::uint32_t rank,
                       const std::vector<PartialResult>& records) {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write result file: " + file.string());
    os.write(kResultMagic, 4);
    write_le<std::uint32_t>(os, tag);
    write_le<std::uint32_t>(os, rank);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        auto bytes = serialize_partial_result(r);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    }
    if (!os) throw std::runtime_error("result write failed: " + file.string());
}

ResultFile read_result_file(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open result file: " + file.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kResultMagic, 4) != 0)
        throw std::runtime_error("bad result magic: " + file.string());
    ResultFile rf;
    rf.tag = read_le<std::uint32_t>(is);
    rf.rank = read_le<std::uint32_t>(is);
    auto count = read_le<std::uint32_t>(is);
    rf.records.reserve(count);
    std::array<std::uint8_t, kPartialResultBytes> buf;
    for (std::uint32_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (!is) throw std::runtime_error("result file truncated: " + file.string());
        rf.records.push_back(deserialize_partial_result(buf));
    }
    return rf;
}

LoadStep subtask_r_step(BatchIndex& index, BufferQueues& queues, bool preempt) {
    if (queues.q_f.full()) return LoadStep::QueueFull;
    auto dp = index.pop();
    if (!dp) return LoadStep::Exhausted;
    if (preempt) {
        index.push_reclaim(std::move(*dp));
        return LoadStep::Preempted;
    }
    auto buf = queues.q_r.try_pop();
    if (!buf) {
        index.push_reclaim(std::move(*dp));
        return LoadStep::Yielded;
    }
    (*buf)->batch = read_batch(dp->file);
    (*buf)->descriptor = *dp;
    queues.q_f.push(std::move(*buf));
    return LoadStep::Loaded;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ResultBuffer {
    std::uint32_t tag = 0;
    std::vector<PartialResult> records;
};

enum class Role { R, I, K };

// Shared pipeline state: lanes pull their role between work items.
struct Shared {
    const FragmentIonIndex& index;
    const SearchConfig& cfg;
    int rank;
    std::filesystem::path results_dir;
    MetricsRecorder& metrics;

    BufferQueues queues;
    Channel<std::unique_ptr<ResultBuffer>> q_k;
    Channel<std::unique_ptr<ResultBuffer>> q_kp;

    std::mutex batch_mu;
    BatchIndex batches;
    int total_batches = 0;

    std::mutex sched_mu;
    SchedulerState sched;
    int actual_r = 0;
    int actual_i = 0;
    Clock::time_point start = Clock::now();

    std::atomic<int> searched{0};
    std::atomic<int> written{0};
    std::atomic<bool> data_exhausted{false};
    std::atomic<bool> failed{false};

    std::mutex out_mu;
    PipelineOutput out;
    std::exception_ptr error;
    std::atomic<double> io_seconds{0.0};

    Shared(const FragmentIonIndex& idx, const SearchConfig& c, int rk,
           std::filesystem::path dir, MetricsRecorder& m, int buffers)
        : index(idx), cfg(c), rank(rk), results_dir(std::move(dir)), metrics(m),
          queues(buffers), q_k(64), q_kp(64) {
        for (int i = 0; i < 8; ++i)
            q_kp.push(std::make_unique<ResultBuffer>());
    }

    void fail(std::exception_ptr e) {
        std::lock_guard lk(out_mu);
        if (!error) error = e;
        failed = true;
        queues.q_f.close();
        queues.q_r.close();
        q_k.close();
        q_kp.close();
    }

    void add_io(double s) {
        double cur = io_seconds.load();
        while (!io_seconds.compare_exchange_weak(cur, cur + s)) {}
    }
};

// I lane: pop a batch (measuring wait), run one scheduling tick, search,
// emit results, recycle the buffer.
bool i_lane_step(Shared& sh) {
    const auto wait_start = Clock::now();
    std::optional<BufferPtr> buf;
    while (!buf) {
        if (sh.failed || sh.searched.load() >= sh.total_batches) return false;
        buf = sh.queues.q_f.pop_for(std::chrono::duration<double>(0.005));
        if (sh.queues.q_f.closed() && sh.queues.q_f.empty() && !buf) return false;
    }
    const double t_wait = seconds_since(wait_start);

    {
        std::lock_guard lk(sh.sched_mu);
        const auto region = queue_region(static_cast<int>(sh.queues.q_f.size()));
        schedule_tick(sh.sched, region, sh.queues.q_f.full(),
                      sh.data_exhausted.load(), t_wait);
        sh.metrics.add_sched_sample({seconds_since(sh.start), t_wait,
                                     sh.sched.t_cum, sh.sched.t_fct,
                                     sh.sched.lanes_r, sh.sched.lanes_i,
                                     static_cast<int>(region) + 1});
    }

    const SpectrumBatch& batch = (*buf)->batch;
    auto results = search_batch(batch, sh.index, sh.cfg);

    auto rb = sh.q_kp.pop();
    if (!rb) return false;
    (*rb)->tag = batch.tag;
    (*rb)->records.clear();
    {
        std::lock_guard lk(sh.out_mu);
        auto& counters = sh.metrics.counters();
        for (auto& qr : results) {
            counters.queries += 1;
            counters.scored_candidates += qr.partial.candidate_count;
            counters.precursor_candidates += qr.precursor_candidates;
            counters.shared_ion_pairs += qr.shared_ion_pairs;
            (*rb)->records.push_back(qr.partial);
            for (auto& ov : qr.overflow) (*rb)->records.push_back(ov);
            if (!qr.top_hits.empty())
                sh.out.heaps[qr.partial.query_id] = std::move(qr.top_hits);
        }
        sh.out.batches_searched += 1;
    }
    sh.q_k.push(std::move(*rb));

    // Recycle the batch buffer.
    (*buf)->batch = SpectrumBatch{};
    sh.queues.q_r.push(std::move(*buf));

    const int done = sh.searched.fetch_add(1) + 1;
    if (done >= sh.total_batches) {
        sh.data_exhausted = true;
        sh.queues.q_f.close();
        sh.q_k.close();
    }
    return true;
}

// R lane: one load step under the batch-index lock.
LoadStep r_lane_step(Shared& sh, bool preempt) {
    std::optional<BatchDescriptor> dp;
    {
        std::lock_guard lk(sh.batch_mu);
        dp = sh.batches.pop();
    }
    if (!dp) return LoadStep::Exhausted;
    if (preempt) {
        std::lock_guard lk(sh.batch_mu);
        sh.batches.push_reclaim(std::move(*dp));
        return LoadStep::Preempted;
    }
    auto buf = sh.queues.q_r.pop_for(std::chrono::duration<double>(0.02));
    if (!buf) {
        std::lock_guard lk(sh.batch_mu);
        sh.batches.push_reclaim(std::move(*dp));
        return LoadStep::Yielded;
    }
    const auto t0 = Clock::now();
    (*buf)->batch = read_batch(dp->file);
    sh.add_io(seconds_since(t0));
    (*buf)->descriptor = *dp;
    if (!sh.queues.q_f.push(std::move(*buf))) return LoadStep::Exhausted;
    return LoadStep::Loaded;
}

// K lane: serialize one result batch; one retry on write failure.
bool k_lane_step(Shared& sh) {
    auto rb = sh.q_k.pop();
    if (!rb) return false;
    const auto file =
        sh.results_dir / result_file_name((*rb)->tag,
                                          static_cast<std::uint32_t>(sh.rank));
    const auto t0 = Clock::now();
    try {
        write_result_file(file, (*rb)->tag, static_cast<std::uint32_t>(sh.rank),
                          (*rb)->records);
    } catch (const std::exception&) {
        write_result_file(file, (*rb)->tag, static_cast<std::uint32_t>(sh.rank),
                          (*rb)->records);
    }
    sh.add_io(seconds_since(t0));
    {
        std::lock_guard lk(sh.out_mu);
        sh.out.results_written += 1;
    }
    sh.written.fetch_add(1);
    (*rb)->records.clear();
    sh.q_kp.try_push(std::move(*rb));
    return true;
}

// Floater lanes move between R and I as the scheduler redistributes.
void floater_loop(Shared& sh, bool start_as_r) {
    Role role = start_as_r ? Role::R : Role::I;
    {
        std::lock_guard lk(sh.sched_mu);
        if (role == Role::R) ++sh.actual_r;
        else ++sh.actual_i;
    }
    try {
        while (!sh.failed) {
            // Reconcile with the scheduler's desired split.
            {
                std::lock_guard lk(sh.sched_mu);
                if (role == Role::R && sh.actual_r > sh.sched.lanes_r) {
                    --sh.actual_r;
                    ++sh.actual_i;
                    role = Role::I;
                } else if (role == Role::I && sh.actual_i > sh.sched.lanes_i &&
                           sh.actual_r < sh.sched.lanes_r &&
                           !sh.data_exhausted.load()) {
                    --sh.actual_i;
                    ++sh.actual_r;
                    role = Role::R;
                }
            }
            if (role == Role::R) {
                const auto step = r_lane_step(sh, false);
                if (step == LoadStep::Exhausted) {
                    sh.data_exhausted = true;
                    std::lock_guard lk(sh.sched_mu);
                    --sh.actual_r;
                    ++sh.actual_i;
                    if (sh.sched.lanes_r > 0) {
                        sh.sched.lanes_i += sh.sched.lanes_r;
                        sh.sched.lanes_r = 0;
                    }
                    role = Role::I;
                } else if (step == LoadStep::QueueFull || step == LoadStep::Yielded) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(1));
                }
            } else {
                if (!i_lane_step(sh)) break;
            }
        }
    } catch (...) {
        sh.fail(std::current_exception());
    }
}

void k_loop(Shared& sh) {
    try {
        while (!sh.failed && k_lane_step(sh)) {}
    } catch (...) {
        sh.fail(std::current_exception());
    }
}

}  // namespace

PipelineOutput run_search_pipeline(const FragmentIonIndex& index,
                                   BatchIndex batches, const SearchConfig& cfg,
                                   const SchedulerConfig& sched_cfg, int rank,
                                   const std::filesystem::path& results_dir,
                                   MetricsRecorder& metrics) {
    std::filesystem::create_directories(results_dir);
    int cores = sched_cfg.threads;
    if (cores <= 0) {
        cores = static_cast<int>(std::thread::hardware_concurrency());
        if (cores <= 0) cores = 4;
        cores = std::min(cores, 8);
    }
    cores = std::max(cores, 3);

    Shared sh(index, cfg, rank, results_dir, metrics,
              std::max(1, sched_cfg.buffers));
    sh.total_batches =
        static_cast<int>(batches.pending.size() + batches.reclaim_stack.size());
    sh.batches = std::move(batches);
    sh.sched = SchedulerState::initial(cores, sched_cfg.alpha, sched_cfg.beta,
                                      sched_cfg.t_min, sched_cfg.t_max);

    if (sh.total_batches == 0) {
        metrics.add_timing({rank, 3, 0.0, 0.0, 0.0, 0.0, 0.0});
        return std::move(sh.out);
    }

    const auto t0 = Clock::now();
    std::vector<std::thread> threads;
    for (int i = 0; i < 2; ++i) threads.emplace_back(k_loop, std::ref(sh));
    const int floaters = sh.sched.pool_size - 2;
    for (int i = 0; i < floaters; ++i)
        threads.emplace_back(floater_loop, std::ref(sh), i < sh.sched.lanes_r);
    for (auto& t : threads) t.join();

    if (sh.error) std::rethrow_exception(sh.error);
    if (sh.written.load() != sh.total_batches)
        throw std::runtime_error("pipeline ended with unwritten result batches");

    double wait_total = 0.0;
    for (const auto& s : metrics.sched_samples()) wait_total += s.t_wait;
    SuperstepTiming t;
    t.rank = rank;
    t.superstep = 3;
    t.wall_seconds = seconds_since(t0);
    t.io_seconds = sh.io_seconds.load();
    t.wait_seconds = wait_total;
    metrics.add_timing(t);
    return std::move(sh.out);
}

}  // namespace hicops
