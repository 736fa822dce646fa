/**
 * Copyright 2026 The bftdsn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <queue>
#include <random>
#include <unordered_set>
#include <vector>

#include "bftdsn/bytes.hpp"

namespace bftdsn::sim {

/// Simulated time in microseconds.
using Time = std::int64_t;
inline constexpr Time kMillisecond = 1000;

using NodeIndex = std::uint32_t;
using TimerId = std::uint64_t;
using Payload = std::shared_ptr<const Bytes>;

/// Control traffic (consensus, signatures, acks) and bulk data move through
/// separate per-node queues so that a large transfer does not hold up votes.
enum class Lane : std::uint8_t { kControl = 0, kBulk = 1 };

struct LinkPolicy {
  Time delta = kMillisecond;  // post-GST propagation bound
  Time gst = 0;
  double pre_gst_drop = 0.0;
  /// Before GST propagation is uniform in [delta, pre_gst_factor * delta].
  std::int64_t pre_gst_factor = 20;
  /// Per-node link rate in each direction. 1e6 bytes/ms is 1 GB/s.
  double bytes_per_ms = 1e6;

  [[nodiscard]] Time transfer_time(std::size_t bytes) const;
};

class Node {
 public:
  virtual ~Node() = default;
  virtual void on_message(NodeIndex from, const Payload& payload) = 0;
  virtual void on_timer(std::uint64_t tag) = 0;
};

enum class EventKind : std::uint8_t { kDeliver = 0, kTimer = 1, kCallback = 2, kDrop = 3 };

struct TraceRecord {
  Time time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kDeliver;
  NodeIndex from = 0;
  NodeIndex to = 0;
  std::uint64_t size = 0;  // payload bytes, or the timer tag
};

struct RunResult {
  bool satisfied = false;  // predicate held
  bool exhausted = false;  // queue ran empty
  bool time_cap_hit = false;
  Time time = 0;
  std::uint64_t events = 0;
};

struct NetStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t bytes_sent = 0;
};

/// Single-threaded, seeded event loop. Events run in (time, sequence) order.
class Simulator {
 public:
  Simulator(LinkPolicy policy, std::uint64_t seed);

  /// Registers a handler; the simulator does not own it.
  NodeIndex add_node(Node* node, bool honest = true);
  void set_honest(NodeIndex node, bool honest);
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] const LinkPolicy& policy() const { return policy_; }
  [[nodiscard]] Time now() const { return now_; }

  /// Throws SimulationError for an unknown node.
  void send(NodeIndex from, NodeIndex to, Payload payload, Lane lane = Lane::kControl);
  TimerId schedule(NodeIndex node, Time delay, std::uint64_t tag);
  void cancel(TimerId id);
  /// Runs `fn` at now + delay; used by drivers outside any node.
  void call_after(Time delay, std::function<void()> fn);

  /// Processes events until `done()` holds, the queue is empty or the next
  /// event lies beyond `time_cap`.
  RunResult run_until(const std::function<bool()>& done, Time time_cap);

  /// Running hash over every processed event.
  [[nodiscard]] const Hash256& trace_hash() const { return trace_hash_; }
  /// One line per processed event when set.
  void set_trace_sink(std::ostream* sink) { trace_sink_ = sink; }
  [[nodiscard]] const NetStats& stats() const { return stats_; }
  /// Largest propagation delay seen on an honest-to-honest message sent
  /// after GST.
  [[nodiscard]] Time max_post_gst_delay() const { return max_post_gst_delay_; }

 private:
  struct Event {
    Time time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kDeliver;
    NodeIndex from = 0;
    NodeIndex to = 0;
    Payload payload;
    std::uint64_t tag = 0;
    Time sent_at = 0;
    Time propagation = 0;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct Queues {
    Time egress_free[2] = {0, 0};
    Time ingress_free[2] = {0, 0};
  };

  void check_node(NodeIndex n) const;
  void push(Event e);
  void record(const Event& e);
  void dispatch(Event& e);

  LinkPolicy policy_;
  std::mt19937_64 rng_;
  std::vector<Node*> nodes_;
  std::vector<bool> honest_;
  std::vector<Queues> queues_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<std::uint64_t> cancelled_;
  Time now_ = 0;
  std::uint64_t next_seq_ = 0;
  Hash256 trace_hash_;
  std::ostream* trace_sink_ = nullptr;
  NetStats stats_;
  Time max_post_gst_delay_ = 0;
};

}  // namespace bftdsn::sim
