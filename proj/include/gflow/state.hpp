#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "gflow/errors.hpp"
#include "gflow/profile.hpp"

namespace gflow {

using ComponentId = std::int64_t;
using CurvePtr = std::shared_ptr<const ProfileCurve>;

struct AxialInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool intersects(const AxialInterval& o) const { return lo <= o.hi && o.lo <= hi; }
  AxialInterval inflated(double r) const { return {lo - r, hi + r}; }
  AxialInterval hull(const AxialInterval& o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
};

struct SurgeryRecord {
  double time = 0.0;
  ComponentId component_id = 0;
  double cut_s = 0.0;      // cut on the side away from the curvature peak
  double cut_s_far = 0.0;  // matching cut on the other flank
  double r_star = 0.0;
  double k_star = 0.0;
  AxialInterval modified_interval;
  double pre_max_g = 0.0;
  double post_max_g = 0.0;  // over the retained caps
  std::optional<double> removed_component_max_g;
  std::int64_t epoch = 0;  // surgery epoch this record opened
};

class SurgeryLog {
 public:
  void append(SurgeryRecord r) {
    if (!records_.empty() && r.time < records_.back().time) {
      throw SurgeryInvariantViolated("surgery log times must be non-decreasing");
    }
    records_.push_back(std::move(r));
  }
  const std::vector<SurgeryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<SurgeryRecord> records_;
};

struct Snapshot {
  double t = 0.0;
  std::int64_t step = 0;
  std::int64_t surgery_epoch = 0;
  std::map<ComponentId, CurvePtr> components;
  std::map<ComponentId, std::int64_t> node_epoch;
};

/// Bounded history: a decimated archive (at most `capacity` snapshots; when it
/// fills, every other entry is dropped and the stride doubles) plus the last
/// few consecutive steps.
class History {
 public:
  explicit History(std::size_t capacity = 512, std::size_t recent = 3)
      : capacity_(capacity), recent_cap_(recent) {}

  void push(const Snapshot& s) {
    recent_.push_back(s);
    while (recent_.size() > recent_cap_) recent_.pop_front();
    if (pushes_ % stride_ == 0) {
      archive_.push_back(s);
      if (archive_.size() > capacity_) {
        std::vector<Snapshot> kept;
        kept.reserve(capacity_ / 2 + 1);
        for (std::size_t i = 0; i < archive_.size(); i += 2) kept.push_back(std::move(archive_[i]));
        archive_ = std::move(kept);
        stride_ *= 2;
      }
    }
    ++pushes_;
  }

  bool empty() const { return recent_.empty(); }
  std::size_t stride() const { return stride_; }
  const std::deque<Snapshot>& recent() const { return recent_; }
  const std::vector<Snapshot>& archive() const { return archive_; }

  double earliest_time() const {
    if (archive_.empty()) return recent_.empty() ? 0.0 : recent_.front().t;
    return std::min(archive_.front().t, recent_.front().t);
  }

  /// Every stored snapshot with t in [t0, t1], time-ordered, without duplicates.
  std::vector<const Snapshot*> in_window(double t0, double t1) const {
    std::vector<const Snapshot*> out;
    for (const auto& s : archive_)
      if (s.t >= t0 && s.t <= t1) out.push_back(&s);
    for (const auto& s : recent_)
      if (s.t >= t0 && s.t <= t1) out.push_back(&s);
    std::sort(out.begin(), out.end(), [](const Snapshot* a, const Snapshot* b) { return a->step < b->step; });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Snapshot* a, const Snapshot* b) { return a->step == b->step; }),
              out.end());
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t recent_cap_;
  std::size_t stride_ = 1;
  std::size_t pushes_ = 0;
  std::vector<Snapshot> archive_;
  std::deque<Snapshot> recent_;
};

/// The evolving world: time, components, history and the surgery log.
struct FlowState {
  double t = 0.0;
  std::int64_t step = 0;
  std::int64_t surgery_epoch = 0;
  ComponentId next_id = 0;
  std::map<ComponentId, CurvePtr> components;
  std::map<ComponentId, std::int64_t> node_epoch;
  History history;
  SurgeryLog log;

  ComponentId add_component(ProfileCurve c) {
    const ComponentId id = next_id++;
    components.emplace(id, std::make_shared<const ProfileCurve>(std::move(c)));
    node_epoch[id] = 0;
    return id;
  }

  void remove_component(ComponentId id) {
    components.erase(id);
    node_epoch.erase(id);
  }

  const ProfileCurve& curve(ComponentId id) const {
    auto it = components.find(id);
    if (it == components.end()) throw OutOfRange("no component with id " + std::to_string(id));
    return *it->second;
  }

  Snapshot snapshot() const { return Snapshot{t, step, surgery_epoch, components, node_epoch}; }

  void record() { history.push(snapshot()); }
};

/// A state holding the given curves at time 0, with the initial snapshot recorded.
inline FlowState make_state(std::vector<ProfileCurve> curves) {
  FlowState st;
  for (auto& c : curves) st.add_component(std::move(c));
  st.record();
  return st;
}

}  // namespace gflow
