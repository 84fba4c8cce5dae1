#include "pic/transport.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <thread>

#include "pic/error.hpp"

namespace pic {

class ThreadedTransport final : public Transport {
 public:
  ThreadedTransport(Hub& hub, int rank) : hub_(hub), rank_(rank) {
    if (hub.jitter_seed_) rng_.seed(*hub.jitter_seed_ ^ (0x9e3779b97f4a7c15ull * (rank + 1)));
  }

  int rank() const override { return rank_; }
  int size() const override { return hub_.size(); }

  void send(int dest, Tag tag, Bytes payload) override {
    jitter();
    hub_.deliver(rank_, dest, tag, std::move(payload));
  }

  Bytes recv(int source, Tag tag) override {
    jitter();
    return hub_.take(source, rank_, tag);
  }

  void barrier() override {
    jitter();
    hub_.wait_barrier();
  }

 private:
  void jitter() {
    if (!hub_.jitter_seed_) return;
    const auto r = rng_() % 4;
    if (r == 0) std::this_thread::yield();
    else if (r == 1) std::this_thread::sleep_for(std::chrono::microseconds(rng_() % 200));
  }

  Hub& hub_;
  int rank_;
  std::mt19937_64 rng_;
};

Hub::Hub(int n_ranks, std::optional<std::uint64_t> jitter_seed)
    : n_(n_ranks), jitter_seed_(jitter_seed) {
  if (n_ranks < 1) throw SimulationError("hub needs at least one rank");
  for (int r = 0; r < n_ranks; ++r) boxes_.push_back(std::make_unique<Mailbox>());
}

std::unique_ptr<Transport> Hub::endpoint(int rank) {
  if (rank < 0 || rank >= n_) throw SimulationError("endpoint rank out of range");
  return std::make_unique<ThreadedTransport>(*this, rank);
}

void Hub::abort(const std::string& reason) {
  {
    std::lock_guard lock(abort_mu_);
    if (aborted_.load()) return;
    abort_reason_ = reason;
    aborted_.store(true);
  }
  for (auto& box : boxes_) {
    std::lock_guard lock(box->mu);
    box->cv.notify_all();
  }
  std::lock_guard lock(barrier_mu_);
  barrier_cv_.notify_all();
}

void Hub::throw_aborted() const {
  std::lock_guard lock(abort_mu_);
  throw TransportError("transport aborted: " + abort_reason_);
}

void Hub::deliver(int source, int dest, Tag tag, Bytes payload) {
  if (dest < 0 || dest >= n_) throw TransportError("send to nonexistent rank " + std::to_string(dest));
  if (aborted_.load()) throw_aborted();
  Mailbox& box = *boxes_[dest];
  {
    std::lock_guard lock(box.mu);
    box.queues[{source, tag.key()}].push_back(std::move(payload));
  }
  box.cv.notify_all();
}

Bytes Hub::take(int source, int dest, Tag tag) {
  if (source < 0 || source >= n_) throw TransportError("receive from nonexistent rank " + std::to_string(source));
  Mailbox& box = *boxes_[dest];
  std::unique_lock lock(box.mu);
  const auto key = std::make_pair(source, tag.key());
  for (;;) {
    if (aborted_.load()) {
      lock.unlock();
      throw_aborted();
    }
    auto it = box.queues.find(key);
    if (it != box.queues.end() && !it->second.empty()) {
      Bytes b = std::move(it->second.front());
      it->second.pop_front();
      return b;
    }
    box.cv.wait(lock);
  }
}

void Hub::wait_barrier() {
  std::unique_lock lock(barrier_mu_);
  if (aborted_.load()) {
    lock.unlock();
    throw_aborted();
  }
  const std::uint64_t gen = barrier_generation_;
  if (++barrier_waiting_ == n_) {
    barrier_waiting_ = 0;
    ++barrier_generation_;
    barrier_cv_.notify_all();
    return;
  }
  barrier_cv_.wait(lock, [&] { return barrier_generation_ != gen || aborted_.load(); });
  if (barrier_generation_ == gen) {
    lock.unlock();
    throw_aborted();
  }
}

void LoopbackTransport::send(int dest, Tag tag, Bytes payload) {
  if (dest != 0) throw TransportError("loopback transport has a single rank");
  queues_[tag.key()].push_back(std::move(payload));
}

Bytes LoopbackTransport::recv(int source, Tag tag) {
  if (source != 0) throw TransportError("loopback transport has a single rank");
  auto it = queues_.find(tag.key());
  if (it == queues_.end() || it->second.empty()) {
    throw TransportError("loopback receive with no queued message (would deadlock)");
  }
  Bytes b = std::move(it->second.front());
  it->second.pop_front();
  return b;
}

void Communicator::send(int dest, Tag tag, Bytes payload) {
  ScopedRegion region(prof_, "transport.send", RegionClass::Comm);
  if (is_bulk(tag.channel)) {
    if (bulk_peers_ && !std::binary_search(bulk_peers_->begin(), bulk_peers_->end(), dest)) {
      throw SimulationError("bulk message from rank " + std::to_string(rank()) +
                            " to non-neighbour rank " + std::to_string(dest));
    }
    traffic_.bulk_messages += 1;
    traffic_.bulk_bytes += payload.size();
  } else if (tag.channel == Channel::Io) {
    traffic_.io_bytes += payload.size();
  } else {
    traffic_.collective_messages += 1;
  }
  t_->send(dest, tag, std::move(payload));
}

Bytes Communicator::recv(int source, Tag tag) {
  ScopedRegion region(prof_, "transport.recv", RegionClass::Comm);
  return t_->recv(source, tag);
}

void Communicator::barrier() {
  ScopedRegion region(prof_, "transport.barrier", RegionClass::Comm);
  t_->barrier();
}

namespace {
constexpr Tag kReduceUp{Channel::Collective, 1};
constexpr Tag kReduceDown{Channel::Collective, 2};
constexpr Tag kGatherUp{Channel::Collective, 3};
constexpr Tag kGatherDown{Channel::Collective, 4};
constexpr Tag kBroadcast{Channel::Collective, 5};
}  // namespace

std::vector<double> Communicator::reduce_vector(std::span<const double> values, bool take_max) {
  const int n = size();
  if (n == 1) return {values.begin(), values.end()};
  if (rank() != 0) {
    send_values<double>(0, kReduceUp, values);
    return recv_values<double>(0, kReduceDown);
  }
  std::vector<double> acc(values.begin(), values.end());
  for (int r = 1; r < n; ++r) {
    const auto part = recv_values<double>(r, kReduceUp);
    if (part.size() != acc.size()) throw TransportError("collective contributions differ in length");
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] = take_max ? std::max(acc[i], part[i]) : acc[i] + part[i];
    }
  }
  for (int r = 1; r < n; ++r) send_values<double>(r, kReduceDown, acc);
  return acc;
}

double Communicator::sum(double value) {
  const double v[1] = {value};
  return reduce_vector(v, false)[0];
}

double Communicator::max(double value) {
  const double v[1] = {value};
  return reduce_vector(v, true)[0];
}

std::int64_t Communicator::sum(std::int64_t value) {
  const auto all = allgather(static_cast<std::uint64_t>(value));
  std::int64_t s = 0;
  for (auto v : all) s += static_cast<std::int64_t>(v);
  return s;
}

std::vector<double> Communicator::sum(std::span<const double> values) {
  return reduce_vector(values, false);
}

std::vector<std::uint64_t> Communicator::allgather(std::uint64_t value) {
  const int n = size();
  if (n == 1) return {value};
  if (rank() != 0) {
    const std::uint64_t v[1] = {value};
    send_values<std::uint64_t>(0, kGatherUp, v);
    return recv_values<std::uint64_t>(0, kGatherDown);
  }
  std::vector<std::uint64_t> all(n);
  all[0] = value;
  for (int r = 1; r < n; ++r) {
    const auto part = recv_values<std::uint64_t>(r, kGatherUp);
    if (part.size() != 1) throw TransportError("allgather expects one value per rank");
    all[r] = part[0];
  }
  for (int r = 1; r < n; ++r) send_values<std::uint64_t>(r, kGatherDown, all);
  return all;
}

Bytes Communicator::broadcast(Bytes payload) {
  const int n = size();
  if (n == 1) return payload;
  if (rank() != 0) return recv(0, kBroadcast);
  for (int r = 1; r < n; ++r) send(r, kBroadcast, payload);
  return payload;
}

}  // namespace pic
