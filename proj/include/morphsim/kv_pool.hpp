#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace morphsim {

using RequestId = int;
using BlockId = int64_t;

struct KvConfig {
  int block_tokens = 16;
  int64_t block_bytes = 2 * 1024 * 1024;
  int64_t static_capacity_blocks = 0;  // <= 0: engine derives it from the budget
};

struct DetachResult {
  int64_t removed_now = 0;
  int64_t deferred = 0;  // blocks still pending, absorbed from future releases
  int64_t capacity_blocks = 0;
};

// Elastic paged KV block pool. Allocation is block-granular and all-or-
// nothing; capacity can grow (attach) and shrink (detach) at runtime, with
// shrink requests deferred until enough blocks come free. Released blocks
// feed pending detaches before they become allocatable again.
class KvBlockPool {
 public:
  explicit KvBlockPool(const KvConfig& config);

  // Registers a request before any allocation. A request must be admitted
  // exactly once per residency; re-admission after release is allowed.
  void admit(RequestId req);
  bool is_admitted(RequestId req) const { return requests_.count(req) > 0; }

  // Grows req's token footprint by new_tokens, allocating whole blocks to
  // cover it. Returns the newly allocated block ids, or nullopt with no state
  // change if the free list cannot cover the growth.
  std::optional<std::vector<BlockId>> alloc_for_tokens(RequestId req, int64_t new_tokens);

  // Returns all of req's blocks and drops its map. Returns the number of
  // blocks that came off the map (including any absorbed by pending detach).
  int64_t release(RequestId req);

  int64_t attach_blocks(int64_t n);
  DetachResult detach_blocks(int64_t n);

  // LIFO victim selection: the most recently admitted request accepted by
  // `eligible` loses all its blocks. The caller handles requeueing.
  std::optional<RequestId> preempt_victim(const std::function<bool(RequestId)>& eligible);

  int64_t capacity_blocks() const { return capacity_blocks_; }
  int64_t free_blocks() const { return static_cast<int64_t>(free_list_.size()); }
  int64_t used_blocks() const { return capacity_blocks_ - free_blocks(); }
  int64_t attached_extra_blocks() const { return attached_extra_blocks_; }
  int64_t pending_detach_blocks() const { return pending_detach_blocks_; }
  int64_t tokens_of(RequestId req) const;
  int64_t blocks_of(RequestId req) const;
  double usage_fraction() const;
  const KvConfig& config() const { return config_; }

  // Full ledger audit: free + allocated == capacity, capacity == static +
  // attached extra, and no block id appears twice. Throws on violation.
  void check_invariants() const;

  int64_t blocks_needed_for(int64_t existing_tokens, int64_t new_tokens) const;

 private:
  struct PerRequest {
    int64_t tokens = 0;
    std::vector<BlockId> blocks;
    uint64_t admit_seq = 0;
  };

  int64_t absorb_free_into_pending_detach();

  KvConfig config_;
  int64_t capacity_blocks_ = 0;
  int64_t attached_extra_blocks_ = 0;
  int64_t pending_detach_blocks_ = 0;
  BlockId next_block_id_ = 0;
  uint64_t next_admit_seq_ = 0;
  std::vector<BlockId> free_list_;
  std::map<RequestId, PerRequest> requests_;
};

}  // namespace morphsim
