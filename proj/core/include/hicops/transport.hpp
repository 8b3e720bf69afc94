#ifndef HICOPS_TRANSPORT_HPP
#define HICOPS_TRANSPORT_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

namespace hicops {

// Point-to-point messaging plus barriers between worker ranks. Messages
// between a (src, dst) pair arrive in send order; barrier returns only
// after every rank has entered it.
class Transport {
  public:
    static constexpr std::size_t kMaxMessage = 16u << 20;

    virtual ~Transport() = default;
    virtual int rank() const = 0;
    virtual int world_size() const = 0;
    virtual void barrier() = 0;
    // Non-blocking up to a bounded in-flight budget. Throws on oversize.
    virtual void send(int dst, std::vector<std::uint8_t> bytes) = 0;
    // Blocking receive from a specific source.
    virtual std::vector<std::uint8_t> recv(int src) = 0;
    // Blocking receive from any source.
    virtual std::pair<int, std::vector<std::uint8_t>> recv_any() = 0;
};

// Deterministic simulated cluster: ranks as in-process participants
// sharing memory channels. Create once, hand transports()[r] to rank r's
// thread.
class InProcessCluster {
  public:
    explicit InProcessCluster(int world_size);
    ~InProcessCluster();
    Transport& transport(int rank);

    // Fail-fast teardown: wakes every rank blocked in barrier() or a
    // receive; those calls then throw. Used when one rank fails.
    void abort();

    struct Impl;

  private:
    std::unique_ptr<Impl> impl_;
};

// One rank of a multi-process local cluster. Control sockets live under
// `sock_dir`; peers are awaited with a timeout so stragglers at startup
// are tolerated.
std::unique_ptr<Transport> make_process_transport(
    const std::filesystem::path& sock_dir, int rank, int world_size,
    double connect_timeout_s = 30.0);

}  // namespace hicops

#endif
