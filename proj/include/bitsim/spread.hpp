#pragma once

#include <cstdint>
#include <vector>

#include "bitsim/message.hpp"
#include "bitsim/rng.hpp"

namespace bitsim {

// Source-obfuscation spreading strategies.
//
// Immediate sends to every target at once. Trickle permutes the targets
// and releases them in batches, one batch per round, with a fixed delay
// between rounds. Diffusion delays each target by an independent
// exponential draw.
struct SpreadingStrategy {
  enum class Kind { Immediate, Trickle, Diffusion };

  Kind kind = Kind::Immediate;
  TimeMs trickle_delay_ms = 0;      // Trickle: delay between rounds, >= 0
  std::uint32_t trickle_batch = 1;  // Trickle: targets per round, >= 1
  TimeMs diffusion_mean_ms = 0;     // Diffusion: mean of the draws, > 0

  static SpreadingStrategy immediate() { return {}; }

  static SpreadingStrategy trickle(TimeMs delay_ms, std::uint32_t batch = 1) {
    SpreadingStrategy s;
    s.kind = Kind::Trickle;
    s.trickle_delay_ms = delay_ms;
    s.trickle_batch = batch < 1 ? 1 : batch;
    return s;
  }

  static SpreadingStrategy diffusion(TimeMs mean_ms) {
    SpreadingStrategy s;
    s.kind = Kind::Diffusion;
    s.diffusion_mean_ms = mean_ms;
    return s;
  }
};

// Assigns a send time to every target per the strategy. Exactly one send
// per target; the peer order is re-randomized on every call.
template <typename PayloadFn>
std::vector<TimedSend> schedule_spread(Rng& rng, const SpreadingStrategy& s,
                                       std::vector<PeerId> targets,
                                       PayloadFn&& payload_for, TimeMs now) {
  std::vector<TimedSend> out;
  out.reserve(targets.size());
  switch (s.kind) {
    case SpreadingStrategy::Kind::Immediate:
      for (PeerId p : targets) {
        out.push_back({now, p, payload_for(p)});
      }
      break;
    case SpreadingStrategy::Kind::Trickle: {
      rng.shuffle(targets);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const TimeMs at =
            now + static_cast<TimeMs>(i / s.trickle_batch) * s.trickle_delay_ms;
        out.push_back({at, targets[i], payload_for(targets[i])});
      }
      break;
    }
    case SpreadingStrategy::Kind::Diffusion:
      for (PeerId p : targets) {
        out.push_back({now + rng.exponential(s.diffusion_mean_ms), p,
                       payload_for(p)});
      }
      break;
  }
  return out;
}

}  // namespace bitsim
