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

#include "bftdsn/netsim.hpp"

#include <algorithm>
#include <cmath>

#include "bftdsn/crypto.hpp"

namespace bftdsn::sim {

Time LinkPolicy::transfer_time(std::size_t bytes) const {
  if (bytes == 0) return 0;
  return static_cast<Time>(std::ceil(static_cast<double>(bytes) * kMillisecond / bytes_per_ms));
}

Simulator::Simulator(LinkPolicy policy, std::uint64_t seed) : policy_(policy), rng_(seed) {
  if (policy_.delta <= 0) throw ParameterError("delta must be positive");
  if (policy_.bytes_per_ms <= 0) throw ParameterError("bandwidth must be positive");
  if (policy_.pre_gst_factor < 1) throw ParameterError("pre-GST factor must be at least 1");
  if (policy_.pre_gst_drop < 0 || policy_.pre_gst_drop > 1)
    throw ParameterError("drop probability must lie in [0, 1]");
}

NodeIndex Simulator::add_node(Node* node, bool honest) {
  nodes_.push_back(node);
  honest_.push_back(honest);
  queues_.emplace_back();
  return static_cast<NodeIndex>(nodes_.size() - 1);
}

void Simulator::set_honest(NodeIndex node, bool honest) {
  check_node(node);
  honest_[node] = honest;
}

void Simulator::check_node(NodeIndex n) const {
  if (n >= nodes_.size()) throw SimulationError("unknown node " + std::to_string(n));
}

void Simulator::push(Event e) {
  e.seq = next_seq_++;
  queue_.push(std::move(e));
}

void Simulator::send(NodeIndex from, NodeIndex to, Payload payload, Lane lane) {
  check_node(from);
  check_node(to);
  const std::size_t size = payload ? payload->size() : 0;
  const int l = static_cast<int>(lane);
  const Time tx = policy_.transfer_time(size);
  ++stats_.sent;
  stats_.bytes_sent += size;

  Queues& src = queues_[from];
  const Time egress_end = std::max(now_, src.egress_free[l]) + tx;
  src.egress_free[l] = egress_end;

  Time propagation = 0;
  if (from != to) {
    if (now_ < policy_.gst) {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      if (coin(rng_) < policy_.pre_gst_drop) {
        ++stats_.dropped;
        Event e;
        e.time = now_;
        e.kind = EventKind::kDrop;
        e.from = from;
        e.to = to;
        e.tag = size;
        record(e);
        return;
      }
      std::uniform_int_distribution<Time> d(policy_.delta, policy_.pre_gst_factor * policy_.delta);
      propagation = d(rng_);
    } else {
      std::uniform_int_distribution<Time> d(1, policy_.delta);
      propagation = d(rng_);
    }
  }

  Queues& dst = queues_[to];
  const Time arrival = egress_end + propagation;
  const Time deliver = std::max(arrival, dst.ingress_free[l] + tx);
  dst.ingress_free[l] = deliver;

  Event e;
  e.time = deliver;
  e.kind = EventKind::kDeliver;
  e.from = from;
  e.to = to;
  e.payload = std::move(payload);
  e.sent_at = now_;
  e.propagation = propagation;
  push(std::move(e));
}

TimerId Simulator::schedule(NodeIndex node, Time delay, std::uint64_t tag) {
  check_node(node);
  Event e;
  e.time = now_ + std::max<Time>(delay, 0);
  e.kind = EventKind::kTimer;
  e.to = node;
  e.tag = tag;
  const TimerId id = next_seq_;
  push(std::move(e));
  return id;
}

void Simulator::cancel(TimerId id) { cancelled_.insert(id); }

void Simulator::call_after(Time delay, std::function<void()> fn) {
  Event e;
  e.time = now_ + std::max<Time>(delay, 0);
  e.kind = EventKind::kCallback;
  e.fn = std::move(fn);
  push(std::move(e));
}

void Simulator::record(const Event& e) {
  TraceRecord t{e.time, e.seq, e.kind, e.from, e.to,
                e.kind == EventKind::kDeliver ? (e.payload ? e.payload->size() : 0) : e.tag};
  ByteWriter w(64);
  w.hash(trace_hash_).i64(t.time).u64(t.seq).u8(static_cast<std::uint8_t>(t.kind));
  w.u32(t.from).u32(t.to).u64(t.size);
  trace_hash_ = crypto::sha256(as_view(w.bytes()));
  if (trace_sink_) {
    static constexpr const char* kNames[] = {"deliver", "timer", "call", "drop"};
    *trace_sink_ << t.time << ' ' << t.seq << ' ' << kNames[static_cast<int>(t.kind)] << ' '
                 << t.from << ' ' << t.to << ' ' << t.size << '\n';
  }
}

void Simulator::dispatch(Event& e) {
  switch (e.kind) {
    case EventKind::kDeliver:
      if (honest_[e.from] && honest_[e.to] && e.sent_at >= policy_.gst) {
        max_post_gst_delay_ = std::max(max_post_gst_delay_, e.propagation);
        if (e.propagation > policy_.delta)
          throw SimulationError("post-GST honest message exceeded the delay bound");
      }
      ++stats_.delivered;
      nodes_[e.to]->on_message(e.from, e.payload);
      break;
    case EventKind::kTimer:
      nodes_[e.to]->on_timer(e.tag);
      break;
    case EventKind::kCallback:
      e.fn();
      break;
    case EventKind::kDrop:
      break;
  }
}

RunResult Simulator::run_until(const std::function<bool()>& done, Time time_cap) {
  RunResult r;
  while (true) {
    if (done && done()) {
      r.satisfied = true;
      break;
    }
    if (queue_.empty()) {
      r.exhausted = true;
      break;
    }
    if (queue_.top().time > time_cap) {
      r.time_cap_hit = true;
      break;
    }
    Event e = queue_.top();
    queue_.pop();
    if (e.kind == EventKind::kTimer && cancelled_.erase(e.seq)) continue;
    now_ = e.time;
    record(e);
    ++r.events;
    dispatch(e);
  }
  r.time = now_;
  return r;
}

}  // namespace bftdsn::sim
