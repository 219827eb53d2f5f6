#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <random>

#include "plastic_replay/replay_buffer.hpp"

using namespace plastic_replay;

namespace {

Transition make(std::uint64_t t, double r = 0.0) {
  Transition tr;
  tr.state = {static_cast<double>(t), 1.0};
  tr.action = static_cast<std::int64_t>(t % 3);
  tr.reward = r;
  tr.next_state = {static_cast<double>(t + 1), 0.0};
  tr.done = (t % 5) == 0;
  tr.timestamp = t;
  return tr;
}

struct Stamp {
  std::uint64_t timestamp = 0;
};

}  // namespace

TEST(ReplayBuffer, FirstPushGoesToSlotZero) {
  ReplayBuffer<Transition> b(4);
  EXPECT_EQ(b.push(make(0)), 0u);
  EXPECT_EQ(b.size(), 1u);
}

TEST(ReplayBuffer, EvictsOldestWhenFull) {
  ReplayBuffer<Transition> b(2);
  b.push(make(0));
  b.push(make(1));
  b.push(make(2));
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.at_logical(0).timestamp, 1u);
  EXPECT_EQ(b.at_logical(1).timestamp, 2u);
}

TEST(ReplayBuffer, ZeroCapacityRejected) { EXPECT_THROW(ReplayBuffer<Transition>(0), ConfigError); }

TEST(ReplayBuffer, NonMonotoneTimestampRejected) {
  ReplayBuffer<Transition> b(4);
  b.push(make(5));
  EXPECT_THROW(b.push(make(4)), OrderingError);
  EXPECT_EQ(b.size(), 1u);
}

TEST(ReplayBuffer, EqualTimestampsAccepted) {
  ReplayBuffer<Transition> b(4);
  b.push(make(3));
  EXPECT_NO_THROW(b.push(make(3)));
}

TEST(ReplayBuffer, AgesOldestFirst) {
  ReplayBuffer<Stamp> b(8);
  for (std::uint64_t t : {0u, 5u, 9u}) b.push({t});
  EXPECT_EQ(b.ages(9), (std::vector<std::uint64_t>{9, 4, 0}));
}

TEST(ReplayBuffer, SingleEntryAgeZero) {
  ReplayBuffer<Stamp> b(8);
  b.push({7});
  EXPECT_EQ(b.ages(7), (std::vector<std::uint64_t>{0}));
}

TEST(ReplayBuffer, AgesBeforeNewestTimestampRejected) {
  ReplayBuffer<Stamp> b(8);
  b.push({10});
  EXPECT_THROW(b.ages(9), PreconditionError);
}

TEST(ReplayBuffer, AdvanceMovesClockForwardOnly) {
  ReplayBuffer<Stamp> b(8);
  b.push({3});
  b.advance_to(10);
  EXPECT_EQ(b.global_step(), 10u);
  EXPECT_EQ(b.ages(), (std::vector<std::uint64_t>{7}));
  EXPECT_THROW(b.advance_to(9), OrderingError);
}

TEST(ReplayBuffer, GetRoundTrip) {
  ReplayBuffer<Transition> b(3);
  const Transition x = make(0, 2.5);
  b.push(x);
  EXPECT_EQ(b.get(0), x);
}

TEST(ReplayBuffer, GetAtSizeIsOutOfBounds) {
  ReplayBuffer<Transition> b(3);
  b.push(make(0));
  EXPECT_THROW(b.get(1), BoundsError);
  EXPECT_THROW(b.at_logical(1), BoundsError);
}

TEST(ReplayBuffer, MillionPushesIntoMillionCapacity) {
  ReplayBuffer<Stamp> b(1'000'000);
  for (std::uint64_t t = 0; t < 1'000'000; ++t) b.push({t});
  EXPECT_EQ(b.size(), 1'000'000u);
  EXPECT_TRUE(b.full());
  const auto v = b.view();
  EXPECT_EQ(*std::min_element(v.timestamps.begin(), v.timestamps.end()), 0u);
}

// Shadow model: a deque that drops its front once it exceeds the capacity.
TEST(ReplayBuffer, FuzzAgainstShadowDeque) {
  std::mt19937_64 rng(11);
  for (std::size_t cap : {1u, 2u, 7u, 64u}) {
    ReplayBuffer<Transition> b(cap);
    std::deque<Transition> shadow;
    std::vector<std::size_t> slot_of;  // physical slot per shadow position
    std::uint64_t t = 0;
    for (int i = 0; i < 2000; ++i) {
      t += rng() % 3;
      const Transition x = make(t, static_cast<double>(i));
      b.push(x);
      shadow.push_back(x);
      if (shadow.size() > cap) shadow.pop_front();
      ASSERT_EQ(b.size(), shadow.size());
      for (std::size_t j = 0; j < shadow.size(); ++j) ASSERT_EQ(b.at_logical(j), shadow[j]);
      const std::size_t probe = rng() % b.size();
      ASSERT_EQ(b.get(b.view().physical(probe)), shadow[probe]);
    }
  }
}

TEST(ReplayBuffer, WrappedAgesMatchLogReplay) {
  const std::size_t cap = 50;
  ReplayBuffer<Stamp> b(cap);
  std::vector<std::uint64_t> log;
  std::mt19937_64 rng(3);
  std::uint64_t t = 0;
  for (int i = 0; i < 333; ++i) {
    t += 1 + rng() % 4;
    b.push({t});
    log.push_back(t);
  }
  const std::uint64_t now = t + 17;
  b.advance_to(now);
  std::vector<std::uint64_t> expected;
  for (std::size_t i = log.size() - cap; i < log.size(); ++i) expected.push_back(now - log[i]);
  EXPECT_EQ(b.ages(), expected);
}

TEST(ReplayBuffer, LiveTimestampsAreTheLargest) {
  ReplayBuffer<Stamp> b(10);
  for (std::uint64_t t = 0; t < 37; ++t) b.push({t * 2});
  auto v = b.view();
  std::vector<std::uint64_t> live(v.timestamps.begin(), v.timestamps.end());
  std::sort(live.begin(), live.end());
  for (std::size_t i = 0; i < live.size(); ++i) EXPECT_EQ(live[i], (27 + i) * 2);
}

TEST(ReplayBuffer, AgesNonIncreasingAndLogicalTimestampsIncreasing) {
  ReplayBuffer<Stamp> b(16);
  for (std::uint64_t t = 0; t < 100; ++t) b.push({t * 3});
  const auto ages = b.ages();
  EXPECT_TRUE(std::is_sorted(ages.rbegin(), ages.rend()));
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b.at_logical(i - 1).timestamp, b.at_logical(i).timestamp);
}
