#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "morphsim/kv_pool.hpp"
#include "morphsim/random.hpp"

using namespace morphsim;

namespace {

KvConfig small_pool(int64_t blocks, int block_tokens = 16) {
  KvConfig cfg;
  cfg.block_tokens = block_tokens;
  cfg.block_bytes = 2 * 1024 * 1024;
  cfg.static_capacity_blocks = blocks;
  return cfg;
}

const auto any_request = [](RequestId) { return true; };

}  // namespace

TEST_CASE("prompt allocation uses ceiling arithmetic") {
  KvBlockPool pool(small_pool(64));
  pool.admit(1);
  const auto blocks = pool.alloc_for_tokens(1, 512);
  REQUIRE(blocks.has_value());
  CHECK(blocks->size() == 32);  // 512 / 16
  CHECK(pool.used_blocks() == 32);
  CHECK(pool.tokens_of(1) == 512);
  pool.check_invariants();
}

TEST_CASE("in-block growth allocates nothing") {
  KvBlockPool pool(small_pool(8));
  pool.admit(1);
  REQUIRE(pool.alloc_for_tokens(1, 17));  // 2 blocks, 15 slots spare
  const auto grow = pool.alloc_for_tokens(1, 1);
  REQUIRE(grow.has_value());
  CHECK(grow->empty());
  CHECK(pool.used_blocks() == 2);

  // Crossing the block boundary allocates exactly one more.
  REQUIRE(pool.alloc_for_tokens(1, 14));
  const auto next = pool.alloc_for_tokens(1, 1);
  REQUIRE(next.has_value());
  CHECK(next->size() == 1);
  pool.check_invariants();
}

TEST_CASE("all-or-nothing allocation leaves the pool untouched") {
  KvBlockPool pool(small_pool(2));
  pool.admit(1);
  pool.admit(2);
  REQUIRE(pool.alloc_for_tokens(2, 1));  // one block gone, one free

  const int64_t free_before = pool.free_blocks();
  const int64_t tokens_before = pool.tokens_of(1);
  const auto result = pool.alloc_for_tokens(1, 48);  // needs 3 blocks
  CHECK_FALSE(result.has_value());
  CHECK(pool.free_blocks() == free_before);
  CHECK(pool.tokens_of(1) == tokens_before);
  CHECK(pool.blocks_of(1) == 0);
  pool.check_invariants();
}

TEST_CASE("release returns blocks and rejects double release") {
  KvBlockPool pool(small_pool(64));
  pool.admit(7);
  REQUIRE(pool.alloc_for_tokens(7, 512));
  CHECK(pool.release(7) == 32);
  CHECK(pool.free_blocks() == 64);
  CHECK_THROWS_AS(pool.release(7), std::invalid_argument);

  pool.admit(8);
  CHECK(pool.release(8) == 0);  // admitted, nothing allocated
  CHECK_THROWS_AS(pool.alloc_for_tokens(99, 1), std::invalid_argument);
  pool.check_invariants();
}

TEST_CASE("attach and detach invert cleanly when nothing intervenes") {
  KvBlockPool pool(small_pool(5));
  CHECK(pool.attach_blocks(10) == 15);
  CHECK(pool.attached_extra_blocks() == 10);
  const DetachResult res = pool.detach_blocks(10);
  CHECK(res.removed_now == 10);
  CHECK(res.deferred == 0);
  CHECK(res.capacity_blocks == 5);
  CHECK(pool.attached_extra_blocks() == 0);
  CHECK_THROWS_AS(pool.attach_blocks(0), std::invalid_argument);
  CHECK_THROWS_AS(pool.detach_blocks(1), std::invalid_argument);
  pool.check_invariants();
}

TEST_CASE("detach defers when blocks are allocated") {
  KvBlockPool pool(small_pool(5));
  pool.attach_blocks(10);
  pool.admit(1);
  REQUIRE(pool.alloc_for_tokens(1, 12 * 16));  // 12 of 15 blocks allocated

  const DetachResult res = pool.detach_blocks(10);
  CHECK(res.removed_now == 3);
  CHECK(res.deferred == 7);
  CHECK(pool.pending_detach_blocks() == 7);
  CHECK(pool.capacity_blocks() == 12);
  pool.check_invariants();

  // Released blocks satisfy the pending detach before anyone can claim them.
  pool.release(1);
  CHECK(pool.pending_detach_blocks() == 0);
  CHECK(pool.capacity_blocks() == 5);
  CHECK(pool.free_blocks() == 5);
  CHECK(pool.attached_extra_blocks() == 0);
  pool.check_invariants();
}

TEST_CASE("pending detach absorbs releases before new allocation") {
  KvBlockPool pool(small_pool(4));
  pool.attach_blocks(4);
  pool.admit(1);
  pool.admit(2);
  REQUIRE(pool.alloc_for_tokens(1, 4 * 16));
  REQUIRE(pool.alloc_for_tokens(2, 4 * 16));
  const DetachResult res = pool.detach_blocks(4);
  CHECK(res.removed_now == 0);
  CHECK(res.deferred == 4);

  pool.release(1);
  // All four released blocks went to the pending detach, not the free list.
  CHECK(pool.free_blocks() == 0);
  CHECK(pool.pending_detach_blocks() == 0);
  pool.admit(3);
  CHECK_FALSE(pool.alloc_for_tokens(3, 1).has_value());
  pool.check_invariants();
}

TEST_CASE("LIFO preemption picks the most recently admitted") {
  KvBlockPool pool(small_pool(16));
  for (RequestId id : {10, 11, 12}) {
    pool.admit(id);
    REQUIRE(pool.alloc_for_tokens(id, 16));
  }
  auto victim = pool.preempt_victim(any_request);
  REQUIRE(victim.has_value());
  CHECK(*victim == 12);
  CHECK_FALSE(pool.is_admitted(12));

  victim = pool.preempt_victim([](RequestId id) { return id == 10; });
  REQUIRE(victim.has_value());
  CHECK(*victim == 10);

  victim = pool.preempt_victim(any_request);
  REQUIRE(victim.has_value());
  CHECK(*victim == 11);

  CHECK_FALSE(pool.preempt_victim(any_request).has_value());
  CHECK(pool.free_blocks() == 16);
  pool.check_invariants();
}

TEST_CASE("re-admission after preemption uses a fresh admission stamp") {
  KvBlockPool pool(small_pool(8));
  pool.admit(1);
  pool.admit(2);
  REQUIRE(pool.alloc_for_tokens(1, 16));
  REQUIRE(pool.alloc_for_tokens(2, 16));
  REQUIRE(pool.preempt_victim(any_request) == 2);
  pool.admit(2);
  REQUIRE(pool.alloc_for_tokens(2, 16));
  // 2 was re-admitted after 1, so it is again the newest.
  CHECK(pool.preempt_victim(any_request) == 2);
}

TEST_CASE("ledger balance survives 100k random operations") {
  KvBlockPool pool(small_pool(64, 8));
  Rng rng(2024);
  std::set<RequestId> admitted;
  RequestId next_id = 0;
  int64_t ops = 0;

  while (ops < 100000) {
    const uint64_t roll = rng.next_below(100);
    if (roll < 30) {
      const RequestId id = next_id++;
      pool.admit(id);
      admitted.insert(id);
    } else if (roll < 60 && !admitted.empty()) {
      auto it = admitted.begin();
      std::advance(it, rng.next_below(admitted.size()));
      pool.alloc_for_tokens(*it, 1 + static_cast<int64_t>(rng.next_below(64)));
    } else if (roll < 75 && !admitted.empty()) {
      auto it = admitted.begin();
      std::advance(it, rng.next_below(admitted.size()));
      pool.release(*it);
      admitted.erase(it);
    } else if (roll < 85) {
      pool.attach_blocks(1 + static_cast<int64_t>(rng.next_below(32)));
    } else if (roll < 95) {
      const int64_t can = pool.attached_extra_blocks() - pool.pending_detach_blocks();
      if (can > 0) pool.detach_blocks(1 + static_cast<int64_t>(rng.next_below(can)));
    } else {
      const auto victim = pool.preempt_victim(any_request);
      if (victim) admitted.erase(*victim);
    }
    ++ops;
    if (ops % 64 == 0) pool.check_invariants();
  }
  pool.check_invariants();
}
