#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pic/profiler.hpp"

namespace pic {

using Bytes = std::vector<std::byte>;

/// Message classes. Halo, Current and Migration carry bulk simulation data and
/// must only travel between topology neighbours.
enum class Channel : std::uint8_t { Halo, Current, Migration, Io, Collective };

inline bool is_bulk(Channel c) {
  return c == Channel::Halo || c == Channel::Current || c == Channel::Migration;
}

struct Tag {
  Channel channel = Channel::Collective;
  std::uint32_t id = 0;
  std::uint64_t key() const { return (static_cast<std::uint64_t>(channel) << 32) | id; }
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reliable point-to-point messaging between the ranks of one run, ordered per
/// (sender, receiver, tag). send() never blocks; recv() blocks until a
/// matching message arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  virtual void send(int dest, Tag tag, Bytes payload) = 0;
  virtual Bytes recv(int source, Tag tag) = 0;
  virtual void barrier() = 0;
};

/// Shared state behind the in-process threaded transport.
class Hub {
 public:
  /// jitter_seed, when set, inserts seeded random delays around every
  /// operation to shake out ordering assumptions.
  explicit Hub(int n_ranks, std::optional<std::uint64_t> jitter_seed = std::nullopt);

  int size() const { return n_; }
  std::unique_ptr<Transport> endpoint(int rank);

  /// Wakes every blocked operation with a TransportError.
  void abort(const std::string& reason);
  bool aborted() const { return aborted_.load(); }

 private:
  friend class ThreadedTransport;

  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::pair<int, std::uint64_t>, std::deque<Bytes>> queues;
  };

  void deliver(int source, int dest, Tag tag, Bytes payload);
  Bytes take(int source, int dest, Tag tag);
  void wait_barrier();
  [[noreturn]] void throw_aborted() const;

  int n_;
  std::optional<std::uint64_t> jitter_seed_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::atomic<bool> aborted_{false};
  mutable std::mutex abort_mu_;
  std::string abort_reason_;

  std::mutex barrier_mu_;
  std::condition_variable barrier_cv_;
  int barrier_waiting_ = 0;
  std::uint64_t barrier_generation_ = 0;
};

/// Single-rank transport for serial debugging: messages to self are queued and
/// a receive with nothing queued is reported instead of blocking forever.
class LoopbackTransport final : public Transport {
 public:
  int rank() const override { return 0; }
  int size() const override { return 1; }
  void send(int dest, Tag tag, Bytes payload) override;
  Bytes recv(int source, Tag tag) override;
  void barrier() override {}

 private:
  std::map<std::uint64_t, std::deque<Bytes>> queues_;
};

/// Message counters for one rank.
struct TrafficStats {
  std::uint64_t bulk_messages = 0;
  std::uint64_t bulk_bytes = 0;
  std::uint64_t io_bytes = 0;
  std::uint64_t collective_messages = 0;
};

/// A rank's view of the transport: attributes time to COMM regions, enforces
/// neighbour-only bulk traffic when given a peer list, and provides the small
/// fixed-order collectives.
class Communicator {
 public:
  explicit Communicator(Transport& transport, Profiler* profiler = nullptr)
      : t_(&transport), prof_(profiler) {}

  int rank() const { return t_->rank(); }
  int size() const { return t_->size(); }
  Profiler* profiler() const { return prof_; }

  /// Restricts bulk channels to the given ranks; violations throw.
  void restrict_bulk_to(std::vector<int> peers) { bulk_peers_ = std::move(peers); }

  void send(int dest, Tag tag, Bytes payload);
  Bytes recv(int source, Tag tag);
  void barrier();

  template <typename T>
  void send_values(int dest, Tag tag, std::span<const T> values) {
    Bytes b(values.size_bytes());
    if (!values.empty()) std::memcpy(b.data(), values.data(), values.size_bytes());
    send(dest, tag, std::move(b));
  }

  template <typename T>
  std::vector<T> recv_values(int source, Tag tag) {
    Bytes b = recv(source, tag);
    if (b.size() % sizeof(T) != 0) throw TransportError("message size is not a multiple of the element size");
    std::vector<T> out(b.size() / sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), b.data(), b.size());
    return out;
  }

  /// Sum over ranks, accumulated on rank 0 in rank order, then broadcast.
  double sum(double value);
  double max(double value);
  std::int64_t sum(std::int64_t value);
  /// Element-wise fixed-order sum of equal-length vectors.
  std::vector<double> sum(std::span<const double> values);
  /// Every rank's value, indexed by rank.
  std::vector<std::uint64_t> allgather(std::uint64_t value);
  /// Rank 0's bytes on every rank.
  Bytes broadcast(Bytes payload);

  const TrafficStats& traffic() const { return traffic_; }

 private:
  std::vector<double> reduce_vector(std::span<const double> values, bool take_max);

  Transport* t_;
  Profiler* prof_;
  std::optional<std::vector<int>> bulk_peers_;
  TrafficStats traffic_;
};

}  // namespace pic
