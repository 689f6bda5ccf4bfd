#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "oracles.hpp"
#include "rclicks/adapter.hpp"
#include "rclicks/harness.hpp"
#include "rclicks/rle.hpp"

using namespace rclicks;

namespace {

const std::string kAdapter = RCLICKS_DISK_ADAPTER;

std::string disk_adapter(int radius, const std::string& extra = {}) {
  return kAdapter + " --radius " + std::to_string(radius) + (extra.empty() ? "" : " " + extra);
}

SegmentRequest request(const std::string& id, int w, int h, const std::vector<Click>& clicks,
                       const BinaryMask* prev = nullptr) {
  SegmentRequest r;
  r.id = id;
  r.image = "img.png";
  r.width = w;
  r.height = h;
  r.clicks = clicks;
  r.prev_mask = prev;
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kInvalidParameter;
}

}  // namespace

TEST(Rle, HandCases) {
  BinaryMask empty(3, 2);
  EXPECT_EQ(rle_encode(empty), (std::vector<std::uint64_t>{6}));
  EXPECT_EQ(rle_encode(~empty), (std::vector<std::uint64_t>{0, 6}));
  BinaryMask m(4, 1);
  m.set(1, 0);
  m.set(2, 0);
  EXPECT_EQ(rle_encode(m), (std::vector<std::uint64_t>{1, 2, 1}));
}

TEST(Rle, RoundTripRandomMasks) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto m = oracle::random_mask(rng, 1 + t % 17, 1 + t % 9, 0.1 + 0.016 * t);
    EXPECT_EQ(rle_decode(rle_encode(m), m.width(), m.height()), m);
  }
}

TEST(Rle, RejectsWrongTotals) {
  EXPECT_EQ(kind_of([] { rle_decode({2, 3}, 2, 2); }), ErrorKind::kFormatError);
  EXPECT_EQ(kind_of([] { rle_decode({5}, 2, 2); }), ErrorKind::kFormatError);
}

TEST(ResolveAdapter, FindsProgramsOrRaisesStartupError) {
  EXPECT_EQ(resolve_adapter_command("sh -c true").filename(), "sh");
  EXPECT_EQ(resolve_adapter_command(disk_adapter(3)).string(), kAdapter);
  EXPECT_EQ(kind_of([] { resolve_adapter_command("rclicks-no-such-adapter --x"); }), ErrorKind::kStartupError);
  EXPECT_EQ(kind_of([] { resolve_adapter_command("/nonexistent/adapter"); }), ErrorKind::kStartupError);
  EXPECT_EQ(kind_of([] { resolve_adapter_command("   "); }), ErrorKind::kStartupError);
}

TEST(Subprocess, DiskAdapterMatchesInProcessModel) {
  SubprocessSegmenter seg(disk_adapter(4));
  std::vector<Click> clicks{{10, 8, Polarity::kPositive}, {13, 8, Polarity::kNegative}};
  const BinaryMask prev(30, 20);
  const auto got = seg.predict(request("r1", 30, 20, clicks, &prev));
  EXPECT_EQ(got, disk_mask(clicks, 30, 20, 4));
  // The same process serves many requests.
  clicks.push_back({25, 15, Polarity::kPositive});
  EXPECT_EQ(seg.predict(request("r2", 30, 20, clicks)), disk_mask(clicks, 30, 20, 4));
}

TEST(Subprocess, ErrorResponseIsAdapterError) {
  SubprocessSegmenter seg(disk_adapter(4, "--fail-on 2"));
  const std::vector<Click> clicks{{5, 5, Polarity::kPositive}};
  EXPECT_NO_THROW(seg.predict(request("a", 10, 10, clicks)));
  EXPECT_EQ(kind_of([&] { seg.predict(request("b", 10, 10, clicks)); }), ErrorKind::kAdapterError);
  EXPECT_NO_THROW(seg.predict(request("c", 10, 10, clicks)));
}

TEST(Subprocess, DeadProcessIsAdapterError) {
  SubprocessSegmenter seg(disk_adapter(4, "--exit-after 1"));
  const std::vector<Click> clicks{{5, 5, Polarity::kPositive}};
  EXPECT_NO_THROW(seg.predict(request("a", 10, 10, clicks)));
  EXPECT_EQ(kind_of([&] { seg.predict(request("b", 10, 10, clicks)); }), ErrorKind::kAdapterError);
  EXPECT_EQ(kind_of([&] { seg.predict(request("c", 10, 10, clicks)); }), ErrorKind::kAdapterError);
}

TEST(Subprocess, MalformedResponsesAreAdapterErrors) {
  const std::vector<Click> clicks{{1, 1, Polarity::kPositive}};
  {
    SubprocessSegmenter seg("while read l; do echo not-json; done");
    EXPECT_EQ(kind_of([&] { seg.predict(request("a", 4, 4, clicks)); }), ErrorKind::kAdapterError);
  }
  {
    SubprocessSegmenter seg("while read l; do echo '{\"id\":\"other\",\"mask\":[16]}'; done");
    EXPECT_EQ(kind_of([&] { seg.predict(request("a", 4, 4, clicks)); }), ErrorKind::kAdapterError);
  }
  {
    SubprocessSegmenter seg("while read l; do echo '{\"id\":\"a\",\"mask\":[3]}'; done");
    EXPECT_EQ(kind_of([&] { seg.predict(request("a", 4, 4, clicks)); }), ErrorKind::kAdapterError);
  }
}

TEST(Subprocess, TimeoutIsAdapterError) {
  SubprocessSegmenter seg("sleep 5", std::chrono::milliseconds(200));
  const std::vector<Click> clicks{{1, 1, Polarity::kPositive}};
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { seg.predict(request("a", 4, 4, clicks)); }), ErrorKind::kAdapterError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
}

TEST(Subprocess, HarnessRunsThroughAdapter) {
  std::vector<Instance> instances;
  for (int i = 0; i < 3; ++i) {
    BinaryMask gt(40, 30);
    const std::vector<Click> c{{12 + 6 * i, 15, Polarity::kPositive}};
    gt = disk_mask(c, 40, 30, 6);
    instances.push_back(Instance{"i" + std::to_string(i), "img.png", gt, std::nullopt, std::nullopt});
  }
  EvalConfig cfg;
  cfg.strategy = Strategy::kBaseline;
  const auto ok = run_dataset(instances, [] { return std::make_unique<SubprocessSegmenter>(disk_adapter(6)); }, cfg, 2);
  for (const auto& r : ok) {
    EXPECT_EQ(r.baseline.noc, 1) << r.id;
    EXPECT_FALSE(r.failed());
  }
  // Every adapter process fails its first call, so exactly one instance per
  // worker is marked failed and the run still completes.
  const auto flaky = run_dataset(
      instances, [] { return std::make_unique<SubprocessSegmenter>(disk_adapter(6, "--fail-on 1")); }, cfg, 1);
  EXPECT_TRUE(flaky[0].failed());
  EXPECT_EQ(flaky[0].baseline.noc, cfg.max_clicks);
  EXPECT_FALSE(flaky[1].failed());
  EXPECT_FALSE(flaky[2].failed());
}
