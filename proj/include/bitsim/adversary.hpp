#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bitsim/cid.hpp"
#include "bitsim/rng.hpp"
#include "bitsim/simnet.hpp"

namespace bitsim {

struct Prediction {
  std::uint64_t run_id = 0;
  std::optional<PeerId> predicted;  // empty on abstention
  PeerId truth = 0;
  bool correct = false;
};

// First-timestamp estimator: the sender of the earliest WANT-HAVE for
// the target cid, across the merged logs of all colluding observers.
// Exact ties are resolved uniformly at random; no matching observation
// means the estimator abstains.
inline std::optional<PeerId> first_timestamp_estimate(
    const std::vector<Observation>& observations, Cid target_cid,
    std::uint64_t tie_seed) {
  std::optional<TimeMs> best_time;
  std::vector<PeerId> tied;
  for (const auto& o : observations) {
    if (o.kind != MsgKind::WantHave || o.cid != target_cid) continue;
    if (!best_time || o.time < *best_time) {
      best_time = o.time;
      tied.assign(1, o.sender);
    } else if (o.time == *best_time) {
      bool seen = false;
      for (PeerId p : tied) seen = seen || p == o.sender;
      if (!seen) tied.push_back(o.sender);
    }
  }
  if (tied.empty()) return std::nullopt;
  if (tied.size() == 1) return tied.front();
  Rng rng(tie_seed);
  return tied[rng.uniform_index(tied.size())];
}

inline double prediction_accuracy(const std::vector<Prediction>& predictions) {
  if (predictions.empty()) {
    throw std::invalid_argument("prediction_accuracy: empty input");
  }
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    if (p.correct) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(predictions.size());
}

}  // namespace bitsim
