#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gflow/io.hpp"
#include "gflow/presets.hpp"

using namespace gflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gflow_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Snapshot, FilenameFormat) {
  EXPECT_EQ(snapshot_filename(0.25, 3), "t0.250000_c3.csv");
  EXPECT_EQ(snapshot_filename(1.0 / 3.0, 12), "t0.333333_c12.csv");
}

TEST(Snapshot, RoundTripIsExact) {
  const Dimension d(3);
  const fs::path dir = scratch("roundtrip");
  FlowState st = make_state({dumbbell_profile(1.0, 0.3, 8.0, 2e-2), cylinder_profile(0.5, 2.0, 2e-2)});
  const auto paths = write_snapshot(dir, st, d);
  ASSERT_EQ(paths.size(), 2u);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const ProfileCurve& want = st.curve(static_cast<ComponentId>(k));
    const ProfileCurve got = read_snapshot(paths[k]);
    ASSERT_EQ(got.size(), want.size());
    EXPECT_EQ(got.x(), want.x());
    EXPECT_EQ(got.u(), want.u());
    EXPECT_EQ(got.start_kind(), want.start_kind());
    EXPECT_EQ(got.end_kind(), want.end_kind());
  }
  std::ifstream in(paths[0]);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kSnapshotHeader);
  fs::remove_all(dir);
}

TEST(Snapshot, BadFilesAreRejected) {
  const fs::path dir = scratch("bad");
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    return dir / name;
  };
  EXPECT_THROW(read_snapshot(dir / "absent.csv"), InvalidArgument);
  EXPECT_THROW(read_snapshot(write("empty.csv", "")), InvalidArgument);
  EXPECT_THROW(read_snapshot(write("header.csv", "x,u\n0,0\n")), InvalidArgument);
  EXPECT_THROW(read_snapshot(write("cols.csv", std::string(kSnapshotHeader) + "\n0,0,0\n")), InvalidArgument);
  EXPECT_THROW(read_snapshot(write("num.csv", std::string(kSnapshotHeader) + "\n0,abc,0,0,0,0,0,0\n")),
               InvalidArgument);
  EXPECT_THROW(read_snapshot(write("rows.csv", std::string(kSnapshotHeader) + "\n")), InvalidArgument);
  fs::remove_all(dir);
}

TEST(EventLog, KeyOrderAndCounts) {
  const fs::path dir = scratch("events");
  {
    EventLog log(dir / "events.jsonl");
    EventLog::Object f;
    f["zeta"] = 1;
    f["alpha"] = "a";
    log.emit(0.5, "neck", f);
    log.emit(0.75, "neck", {});
    log.emit(1.0, "termination", {});
    EXPECT_EQ(log.count("neck"), 2);
    EXPECT_EQ(log.count("surgery"), 0);
  }
  std::ifstream in(dir / "events.jsonl");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, R"({"t":0.5,"kind":"neck","zeta":1,"alpha":"a"})");
  int rest = 0;
  while (std::getline(in, line)) ++rest;
  EXPECT_EQ(rest, 2);
  fs::remove_all(dir);
}

TEST(EventLog, SurgeryFieldsCarryAreaDrop) {
  PerformResult r;
  r.area_before = 10.0;
  r.area_after = 7.5;
  r.retained = {4, 5};
  r.removed = 6;
  r.record.removed_component_max_g = 12.0;
  const auto o = surgery_fields(r);
  EXPECT_DOUBLE_EQ(o.at("area_drop").get<double>(), 2.5);
  EXPECT_EQ(o.at("retained").size(), 2u);
  EXPECT_EQ(o.at("removed").get<int>(), 6);
  EXPECT_TRUE(o.contains("removed_component_max_g"));
}
