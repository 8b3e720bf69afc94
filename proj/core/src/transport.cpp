#include "hicops/transport.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hicops/queues.hpp"

namespace hicops {

namespace {
void check_size(std::size_t n) {
    if (n > Transport::kMaxMessage)
        throw std::runtime_error("message exceeds 16 MiB limit");
}
}  // namespace

// ---------------------------------------------------------------------------
// In-process transport

struct InProcessCluster::Impl {
    int world_size;
    // pair_queues[src * P + dst]
    std::vector<std::unique_ptr<Channel<std::vector<std::uint8_t>>>> pair_queues;

    std::mutex barrier_mu;
    std::condition_variable barrier_cv;
    int barrier_count = 0;
    std::uint64_t barrier_generation = 0;
    std::atomic<bool> aborted{false};

    std::vector<std::unique_ptr<Transport>> transports;

    explicit Impl(int P) : world_size(P) {
        pair_queues.reserve(static_cast<std::size_t>(P) * P);
        for (int i = 0; i < P * P; ++i)
            pair_queues.push_back(
                std::make_unique<Channel<std::vector<std::uint8_t>>>(1024));
    }

    void barrier() {
        std::unique_lock lk(barrier_mu);
        if (aborted.load()) throw std::runtime_error("cluster aborted");
        const auto gen = barrier_generation;
        if (++barrier_count == world_size) {
            barrier_count = 0;
            ++barrier_generation;
            barrier_cv.notify_all();
            return;
        }
        barrier_cv.wait(
            lk, [&] { return barrier_generation != gen || aborted.load(); });
        if (barrier_generation == gen)
            throw std::runtime_error("cluster aborted");
    }

    void abort() {
        {
            std::lock_guard lk(barrier_mu);
            aborted.store(true);
        }
        barrier_cv.notify_all();
        for (auto& q : pair_queues) q->close();
    }
};

namespace {

class InProcessTransport final : public Transport {
  public:
    InProcessTransport(InProcessCluster::Impl& impl, int rank)
        : impl_(impl), rank_(rank) {}

    int rank() const override { return rank_; }
    int world_size() const override { return impl_.world_size; }
    void barrier() override { impl_.barrier(); }

    void send(int dst, std::vector<std::uint8_t> bytes) override {
        check_size(bytes.size());
        if (dst < 0 || dst >= impl_.world_size)
            throw std::invalid_argument("send: invalid destination rank");
        queue(rank_, dst).push(std::move(bytes));
    }

    std::vector<std::uint8_t> recv(int src) override {
        auto m = queue(src, rank_).pop();
        if (!m) throw std::runtime_error("recv on closed channel");
        return std::move(*m);
    }

    std::pair<int, std::vector<std::uint8_t>> recv_any() override {
        // Poll source queues round-robin; in-process mode has no shared
        // inbox, so fairness comes from the rotating start index.
        for (;;) {
            for (int i = 0; i < impl_.world_size; ++i) {
                const int src = (poll_start_ + i) % impl_.world_size;
                auto m = queue(src, rank_).try_pop();
                if (m) {
                    poll_start_ = (src + 1) % impl_.world_size;
                    return {src, std::move(*m)};
                }
            }
            // Closed queues mean the cluster aborted (abort() closes
            // every pair queue); drained queues would have returned above.
            if (queue(rank_, rank_).closed())
                throw std::runtime_error("recv on closed channel");
            std::this_thread::sleep_for(std::chrono::microseconds(100));
        }
    }

  private:
    Channel<std::vector<std::uint8_t>>& queue(int src, int dst) {
        return *impl_.pair_queues[static_cast<std::size_t>(src) *
                                      impl_.world_size +
                                  dst];
    }

    InProcessCluster::Impl& impl_;
    int rank_;
    int poll_start_ = 0;
};

}  // namespace

InProcessCluster::InProcessCluster(int world_size)
    : impl_(std::make_unique<Impl>(world_size)) {
    for (int r = 0; r < world_size; ++r)
        impl_->transports.push_back(
            std::make_unique<InProcessTransport>(*impl_, r));
}

InProcessCluster::~InProcessCluster() = default;

Transport& InProcessCluster::transport(int rank) {
    return *impl_->transports.at(static_cast<std::size_t>(rank));
}

void InProcessCluster::abort() { impl_->abort(); }

// ---------------------------------------------------------------------------
// Multi-process transport over local stream sockets

namespace {

enum MsgType : std::uint8_t { kData = 0, kBarrier = 1, kRelease = 2 };

void write_all(int fd, const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    while (n > 0) {
        ssize_t w = ::write(fd, p, n);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("socket write failed");
        }
        p += w;
        n -= static_cast<std::size_t>(w);
    }
}

bool read_all(int fd, void* data, std::size_t n) {
    char* p = static_cast<char*>(data);
    while (n > 0) {
        ssize_t r = ::read(fd, p, n);
        if (r == 0) return false;
        if (r < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("socket read failed");
        }
        p += r;
        n -= static_cast<std::size_t>(r);
    }
    return true;
}

class ProcessTransport final : public Transport {
  public:
    ProcessTransport(const std::filesystem::path& dir, int rank, int P,
                     double timeout_s)
        : dir_(dir), rank_(rank), world_(P), inbox_(4096), control_(256) {
        for (int i = 0; i < P; ++i) per_src_.push_back(
            std::make_unique<Channel<std::vector<std::uint8_t>>>(4096));
        if (P == 1) return;
        std::filesystem::create_directories(dir_);
        listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        const auto path = sock_path(rank_);
        std::filesystem::remove(path);
        std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            throw std::runtime_error("bind failed: " + path.string());
        if (::listen(listen_fd_, P) != 0)
            throw std::runtime_error("listen failed: " + path.string());

        // Outgoing connection to every peer; incoming from every peer.
        out_fds_.assign(static_cast<std::size_t>(P), -1);
        accept_thread_ = std::thread([this] { accept_loop(); });
        const auto deadline =
            std::chrono::steady_clock::now() +
            std::chrono::milliseconds(static_cast<long>(timeout_s * 1000.0));
        for (int peer = 0; peer < world_; ++peer) {
            if (peer == rank_) continue;
            out_fds_[static_cast<std::size_t>(peer)] = connect_to(peer, deadline);
        }
        wait_incoming(deadline);
    }

    ~ProcessTransport() override {
        shutting_down_ = true;
        if (listen_fd_ >= 0) {
            // close() alone does not wake a thread blocked in accept();
            // shut the socket down and poke it with a throwaway
            // connection so the accept loop observes shutting_down_.
            ::shutdown(listen_fd_, SHUT_RDWR);
            int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
            if (fd >= 0) {
                sockaddr_un addr{};
                addr.sun_family = AF_UNIX;
                std::strncpy(addr.sun_path, sock_path(rank_).c_str(),
                             sizeof(addr.sun_path) - 1);
                ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
                ::close(fd);
            }
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        if (listen_fd_ >= 0) ::close(listen_fd_);
        for (int fd : out_fds_)
            if (fd >= 0) ::close(fd);
        for (auto& t : reader_threads_)
            if (t.joinable()) t.join();
        std::filesystem::remove(sock_path(rank_));
    }

    int rank() const override { return rank_; }
    int world_size() const override { return world_; }

    void send(int dst, std::vector<std::uint8_t> bytes) override {
        check_size(bytes.size());
        if (dst < 0 || dst >= world_)
            throw std::invalid_argument("send: invalid destination rank");
        if (dst == rank_) {
            per_src_[static_cast<std::size_t>(dst)]->push(std::move(bytes));
            inbox_.push({dst, {}});
            return;
        }
        send_frame(out_fds_[static_cast<std::size_t>(dst)], kData, bytes);
    }

    std::vector<std::uint8_t> recv(int src) override {
        auto m = per_src_[static_cast<std::size_t>(src)]->pop();
        if (!m) throw std::runtime_error("peer disconnected during recv");
        // Keep the any-source inbox consistent by dropping the matching
        // entry lazily when it surfaces.
        drop_from_inbox(src);
        return std::move(*m);
    }

    std::pair<int, std::vector<std::uint8_t>> recv_any() override {
        for (;;) {
            auto m = inbox_.pop();
            if (!m) throw std::runtime_error("peer disconnected during recv");
            auto taken = per_src_[static_cast<std::size_t>(m->first)]->try_pop();
            if (taken) return {m->first, std::move(*taken)};
            // Entry already consumed by recv(src); skip it.
        }
    }

    void barrier() override {
        if (world_ == 1) return;
        if (rank_ == 0) {
            for (int i = 0; i < world_ - 1; ++i) {
                auto c = control_.pop();
                if (!c || *c != kBarrier)
                    throw std::runtime_error("barrier: peer disappeared");
            }
            std::vector<std::uint8_t> empty;
            for (int peer = 1; peer < world_; ++peer)
                send_frame(out_fds_[static_cast<std::size_t>(peer)], kRelease, empty);
        } else {
            std::vector<std::uint8_t> empty;
            send_frame(out_fds_[0], kBarrier, empty);
            auto c = control_.pop();
            if (!c || *c != kRelease)
                throw std::runtime_error("barrier: coordinator disappeared");
        }
    }

  private:
    std::filesystem::path sock_path(int r) const {
        return dir_ / ("rank_" + std::to_string(r) + ".sock");
    }

    int connect_to(int peer, std::chrono::steady_clock::time_point deadline) {
        const auto path = sock_path(peer);
        for (;;) {
            int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
            if (fd < 0) throw std::runtime_error("socket() failed");
            sockaddr_un addr{};
            addr.sun_family = AF_UNIX;
            std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
                std::uint32_t hello = static_cast<std::uint32_t>(rank_);
                write_all(fd, &hello, sizeof(hello));
                return fd;
            }
            ::close(fd);
            if (std::chrono::steady_clock::now() > deadline)
                throw std::runtime_error("timeout connecting to rank " +
                                         std::to_string(peer));
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }

    void accept_loop() {
        while (!shutting_down_) {
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (shutting_down_) return;
                if (errno == EINTR) continue;
                return;
            }
            std::uint32_t src = 0;
            if (!read_all(fd, &src, sizeof(src))) {
                ::close(fd);
                continue;
            }
            {
                std::lock_guard lk(mu_);
                reader_threads_.emplace_back(
                    [this, fd, src] { reader_loop(fd, static_cast<int>(src)); });
                ++incoming_count_;
            }
            cv_.notify_all();
        }
    }

    void wait_incoming(std::chrono::steady_clock::time_point deadline) {
        std::unique_lock lk(mu_);
        if (!cv_.wait_until(lk, deadline,
                            [&] { return incoming_count_ >= world_ - 1; }))
            throw std::runtime_error("timeout waiting for peer connections");
    }

    void reader_loop(int fd, int src) {
        try {
            for (;;) {
                std::uint8_t type;
                std::uint32_t len;
                if (!read_all(fd, &type, 1)) break;
                if (!read_all(fd, &len, 4)) break;
                std::vector<std::uint8_t> payload(len);
                if (len && !read_all(fd, payload.data(), len)) break;
                if (type == kData) {
                    per_src_[static_cast<std::size_t>(src)]->push(payload);
                    inbox_.push({src, {}});
                } else {
                    control_.push(static_cast<MsgType>(type));
                }
            }
        } catch (const std::exception&) {
        }
        ::close(fd);
        if (!shutting_down_) {
            per_src_[static_cast<std::size_t>(src)]->close();
            control_.close();
        }
    }

    void send_frame(int fd, MsgType type, const std::vector<std::uint8_t>& bytes) {
        std::lock_guard lk(send_mu_);
        std::uint8_t t = type;
        auto len = static_cast<std::uint32_t>(bytes.size());
        write_all(fd, &t, 1);
        write_all(fd, &len, 4);
        if (len) write_all(fd, bytes.data(), len);
    }

    void drop_from_inbox(int) { /* handled lazily in recv_any */ }

    std::filesystem::path dir_;
    int rank_;
    int world_;
    int listen_fd_ = -1;
    std::vector<int> out_fds_;
    std::vector<std::unique_ptr<Channel<std::vector<std::uint8_t>>>> per_src_;
    Channel<std::pair<int, std::vector<std::uint8_t>>> inbox_;
    Channel<MsgType> control_;
    std::thread accept_thread_;
    std::vector<std::thread> reader_threads_;
    std::mutex mu_;
    std::mutex send_mu_;
    std::condition_variable cv_;
    int incoming_count_ = 0;
    std::atomic<bool> shutting_down_{false};
};

}  // namespace

std::unique_ptr<Transport> make_process_transport(
    const std::filesystem::path& sock_dir, int rank, int world_size,
    double connect_timeout_s) {
    return std::make_unique<ProcessTransport>(sock_dir, rank, world_size,
                                              connect_timeout_s);
}

}  // namespace hicops
