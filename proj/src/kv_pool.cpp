#include "morphsim/kv_pool.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace morphsim {

KvBlockPool::KvBlockPool(const KvConfig& config) : config_(config) {
  if (config.block_tokens < 1) throw std::invalid_argument("kv pool: block_tokens must be >= 1");
  if (config.block_bytes < 1) throw std::invalid_argument("kv pool: block_bytes must be >= 1");
  if (config.static_capacity_blocks < 1) {
    throw std::invalid_argument("kv pool: static_capacity_blocks must be >= 1");
  }
  capacity_blocks_ = config.static_capacity_blocks;
  free_list_.reserve(capacity_blocks_);
  for (int64_t i = 0; i < capacity_blocks_; ++i) free_list_.push_back(next_block_id_++);
}

void KvBlockPool::admit(RequestId req) {
  auto [it, inserted] = requests_.try_emplace(req);
  if (!inserted) throw std::invalid_argument("kv pool: request already admitted");
  it->second.admit_seq = next_admit_seq_++;
}

int64_t KvBlockPool::blocks_needed_for(int64_t existing_tokens, int64_t new_tokens) const {
  const int64_t bt = config_.block_tokens;
  const int64_t target_blocks = (existing_tokens + new_tokens + bt - 1) / bt;
  const int64_t current_blocks = (existing_tokens + bt - 1) / bt;
  return target_blocks - current_blocks;
}

std::optional<std::vector<BlockId>> KvBlockPool::alloc_for_tokens(RequestId req,
                                                                  int64_t new_tokens) {
  auto it = requests_.find(req);
  if (it == requests_.end()) throw std::invalid_argument("kv pool: unknown request in alloc");
  if (new_tokens < 1) throw std::invalid_argument("kv pool: new_tokens must be >= 1");

  PerRequest& state = it->second;
  const int64_t needed = blocks_needed_for(state.tokens, new_tokens);
  if (needed > free_blocks()) return std::nullopt;  // all-or-nothing

  std::vector<BlockId> granted;
  granted.reserve(needed);
  for (int64_t i = 0; i < needed; ++i) {
    granted.push_back(free_list_.back());
    free_list_.pop_back();
  }
  state.blocks.insert(state.blocks.end(), granted.begin(), granted.end());
  state.tokens += new_tokens;
  return granted;
}

int64_t KvBlockPool::absorb_free_into_pending_detach() {
  int64_t absorbed = 0;
  while (pending_detach_blocks_ > 0 && !free_list_.empty()) {
    free_list_.pop_back();
    --pending_detach_blocks_;
    --capacity_blocks_;
    --attached_extra_blocks_;
    ++absorbed;
  }
  return absorbed;
}

int64_t KvBlockPool::release(RequestId req) {
  auto it = requests_.find(req);
  if (it == requests_.end()) throw std::invalid_argument("kv pool: unknown request in release");
  const int64_t freed = static_cast<int64_t>(it->second.blocks.size());
  free_list_.insert(free_list_.end(), it->second.blocks.begin(), it->second.blocks.end());
  requests_.erase(it);
  // Pending detaches drain released blocks before anyone can reallocate them.
  absorb_free_into_pending_detach();
  return freed;
}

int64_t KvBlockPool::attach_blocks(int64_t n) {
  if (n < 1) throw std::invalid_argument("kv pool: attach count must be >= 1");
  for (int64_t i = 0; i < n; ++i) free_list_.push_back(next_block_id_++);
  capacity_blocks_ += n;
  attached_extra_blocks_ += n;
  return capacity_blocks_;
}

DetachResult KvBlockPool::detach_blocks(int64_t n) {
  if (n < 1) throw std::invalid_argument("kv pool: detach count must be >= 1");
  if (n > attached_extra_blocks_ - pending_detach_blocks_) {
    throw std::invalid_argument("kv pool: detach exceeds attached extra blocks");
  }
  DetachResult result;
  const int64_t immediate = std::min<int64_t>(n, free_blocks());
  for (int64_t i = 0; i < immediate; ++i) free_list_.pop_back();
  capacity_blocks_ -= immediate;
  attached_extra_blocks_ -= immediate;
  pending_detach_blocks_ += n - immediate;
  result.removed_now = immediate;
  result.deferred = n - immediate;
  result.capacity_blocks = capacity_blocks_;
  return result;
}

std::optional<RequestId> KvBlockPool::preempt_victim(
    const std::function<bool(RequestId)>& eligible) {
  RequestId victim = -1;
  uint64_t best_seq = 0;
  bool found = false;
  for (const auto& [req, state] : requests_) {
    if (!eligible(req)) continue;
    if (!found || state.admit_seq > best_seq) {
      victim = req;
      best_seq = state.admit_seq;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  release(victim);
  return victim;
}

int64_t KvBlockPool::tokens_of(RequestId req) const {
  auto it = requests_.find(req);
  if (it == requests_.end()) throw std::invalid_argument("kv pool: unknown request in tokens_of");
  return it->second.tokens;
}

int64_t KvBlockPool::blocks_of(RequestId req) const {
  auto it = requests_.find(req);
  if (it == requests_.end()) throw std::invalid_argument("kv pool: unknown request in blocks_of");
  return static_cast<int64_t>(it->second.blocks.size());
}

double KvBlockPool::usage_fraction() const {
  if (capacity_blocks_ == 0) return 0.0;
  return static_cast<double>(used_blocks()) / static_cast<double>(capacity_blocks_);
}

void KvBlockPool::check_invariants() const {
  int64_t allocated = 0;
  std::unordered_set<BlockId> seen;
  seen.reserve(capacity_blocks_);
  auto add = [&](BlockId id) {
    if (!seen.insert(id).second) throw std::logic_error("kv pool: duplicate block id");
  };
  for (BlockId id : free_list_) add(id);
  for (const auto& [req, state] : requests_) {
    allocated += static_cast<int64_t>(state.blocks.size());
    for (BlockId id : state.blocks) add(id);
  }
  if (free_blocks() + allocated != capacity_blocks_) {
    throw std::logic_error("kv pool: free + allocated != capacity");
  }
  if (capacity_blocks_ != config_.static_capacity_blocks + attached_extra_blocks_) {
    throw std::logic_error("kv pool: capacity != static + attached_extra");
  }
  if (pending_detach_blocks_ < 0 || attached_extra_blocks_ < 0) {
    throw std::logic_error("kv pool: negative bookkeeping counter");
  }
}

}  // namespace morphsim
