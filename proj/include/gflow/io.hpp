#pragma once

// Snapshot CSV files and the JSON-lines event log.

#include <cstdio>
#include <filesystem>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/neck.hpp"
#include "gflow/profile.hpp"
#include "gflow/state.hpp"
#include "gflow/surgery.hpp"

namespace gflow {

inline constexpr const char* kSnapshotHeader = "s,x,u,phi,lambda1,lambda_rot,G,H";

inline std::string snapshot_filename(double t, ComponentId id) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "t%.6f_c%lld.csv", t, static_cast<long long>(id));
  return buf;
}

inline void write_snapshot_csv(std::ostream& out, const ProfileCurve& c, Dimension dim) {
  const NodeFields f = evaluate_nodes(c, dim);
  out << kSnapshotHeader << '\n';
  char buf[512];
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.s()[i], c.x()[i], c.u()[i],
                  c.phi()[i], f.lambda1[i], c.lambda_rot()[i], f.g[i], f.h[i]);
    out << buf;
  }
}

/// Writes one file per component into `dir`; returns the paths written.
inline std::vector<std::filesystem::path> write_snapshot(const std::filesystem::path& dir, const FlowState& st,
                                                         Dimension dim) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (const auto& [id, cp] : st.components) {
    const auto path = dir / snapshot_filename(st.t, id);
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    write_snapshot_csv(f, *cp, dim);
    out.push_back(path);
  }
  return out;
}

/// Reads the x and u columns of a snapshot file. An end whose u is exactly
/// zero is a pole, otherwise a mirror end.
inline ProfileCurve read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty snapshot " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSnapshotHeader) throw InvalidArgument("unexpected snapshot header in " + path.string());
  std::vector<double> x, u;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != 8) throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    x.push_back(row[1]);
    u.push_back(row[2]);
  }
  if (x.empty()) throw InvalidArgument("snapshot has no rows: " + path.string());
  const EndKind a = u.front() == 0.0 ? EndKind::Pole : EndKind::Mirror;
  const EndKind b = u.back() == 0.0 ? EndKind::Pole : EndKind::Mirror;
  return ProfileCurve(std::move(x), std::move(u), a, b);
}

/// Append-only JSON-lines writer. Every event carries `t` and `kind` first.
class EventLog {
 public:
  using Object = nlohmann::ordered_json;

  EventLog() = default;
  explicit EventLog(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw Error("cannot open event log " + path.string());
  }

  void emit(double t, const char* kind, const Object& fields) {
    Object line;
    line["t"] = t;
    line["kind"] = kind;
    for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
    if (out_.is_open()) out_ << line.dump() << '\n';
    ++counts_[kind];
  }

  int count(const std::string& kind) const {
    auto it = counts_.find(kind);
    return it == counts_.end() ? 0 : it->second;
  }

  void flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
  std::map<std::string, int> counts_;
};

inline EventLog::Object neck_fields(const NeckRegion& n) {
  EventLog::Object o;
  o["component_id"] = n.component_id;
  o["s_a"] = n.s_a;
  o["s_b"] = n.s_b;
  o["center_s"] = n.center_s;
  o["x_lo"] = n.axial.lo;
  o["x_hi"] = n.axial.hi;
  o["mean_radius"] = n.mean_radius;
  o["radius_deviation"] = n.radius_deviation;
  o["axis_deviation"] = n.axis_deviation;
  o["center_g"] = n.center_g;
  o["center_l1_over_g"] = n.center_l1_over_g;
  o["certified_shrinking"] = n.certified_shrinking;
  o["shrinking_samples"] = n.shrinking_samples;
  return o;
}

inline EventLog::Object surgery_fields(const PerformResult& r) {
  const SurgeryRecord& rec = r.record;
  EventLog::Object o;
  o["component_id"] = rec.component_id;
  o["epoch"] = rec.epoch;
  o["cut_s"] = rec.cut_s;
  o["cut_s_far"] = rec.cut_s_far;
  o["r_star"] = rec.r_star;
  o["k_star"] = rec.k_star;
  o["x_lo"] = rec.modified_interval.lo;
  o["x_hi"] = rec.modified_interval.hi;
  o["pre_max_g"] = rec.pre_max_g;
  o["post_max_g"] = rec.post_max_g;
  if (rec.removed_component_max_g) o["removed_component_max_g"] = *rec.removed_component_max_g;
  o["area_before"] = r.area_before;
  o["area_after"] = r.area_after;
  o["area_drop"] = r.area_before - r.area_after;
  o["cap_pair_area"] = r.cap_pair_area;
  auto retained = EventLog::Object::array();
  for (auto id : r.retained) retained.push_back(id);
  o["retained"] = retained;
  o["removed"] = r.removed;
  return o;
}

inline EventLog::Object verdict_fields(const ComponentVerdict& v) {
  EventLog::Object o;
  o["component_id"] = v.component_id;
  o["verdict"] = to_string(v.verdict);
  o["reason"] = v.reason;
  o["closed"] = v.closed;
  o["max_g"] = v.max_g;
  o["min_l1_over_g"] = v.min_l1_over_g;
  o["covered_fraction"] = v.covered_fraction;
  o["g3_violation"] = v.g3_violation;
  return o;
}

}  // namespace gflow
