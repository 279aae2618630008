#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "catp/compensation.hpp"
#include "catp/encoder.hpp"
#include "catp/matrix.hpp"

namespace catp {

struct PruneThresholds {
  double theta_d = 0.3;
  double theta_u = 0.7;
  double tau = 10.0;

  void validate() const;  // throws std::invalid_argument
};

// One linear projection per pruning boundary: logit_t = patches[t].w + bias.
struct ScoringHead {
  std::vector<double> weight;  // length C
  double bias = 0.0;
};

// Disjoint token subsets by confidence, as local indices into the entering
// patch list (sorted ascending). Scores equal to a threshold land in mid.
struct Partition {
  std::vector<std::size_t> low;
  std::vector<std::size_t> mid;
  std::vector<std::size_t> high;
};

// One bit per entering patch token; set bits mark the survivors.
struct DecisionMask {
  std::vector<std::uint8_t> bits;

  std::size_t popcount() const;
};

// What happened to a grid position at the boundaries seen so far.
enum class PositionFate : std::uint8_t { active, pruned_low, pruned_high };

// Everything observed at one pruning boundary. `stage` is the stage the
// survivors enter (2..S). `prior_fate` has one entry per grid position and
// reflects the boundaries before this one.
struct StageRecord {
  std::size_t stage = 0;
  std::vector<double> scores;
  Partition partition;
  DecisionMask mask;
  IndexMap entering;
  IndexMap surviving;
  std::optional<Prototype> proto_low;
  std::optional<Prototype> proto_high;
  bool fallback_applied = false;
  std::vector<PositionFate> prior_fate;
};

// p_t = sigmoid((patches[t].w + b) / tau); outputs strictly inside (0, 1).
std::vector<double> score_tokens(const Matrix& patches, const ScoringHead& head,
                                 double tau);

// low: p < theta_d; high: p > theta_u; mid: the rest (thresholds inclusive).
Partition partition_tokens(std::span<const double> scores,
                           const PruneThresholds& thresholds);

// Local index of the token to keep when mid comes out empty: minimal
// |p - 0.5|, ties broken by lowest original grid position.
std::size_t fallback_keep_slot(std::span<const double> scores, const IndexMap& entering);

// Moves `slot` out of low/high into mid, keeping all three lists sorted.
void move_to_mid(Partition& partition, std::size_t slot);

DecisionMask make_mask(const Partition& partition, std::size_t entering_count);

// Keeps the patches and index-map entries at set bits, drops prototypes,
// carries cls through unchanged.
TokenSequence gather_retained(const TokenSequence& seq, const DecisionMask& mask);

// Row t holds d p_t / d patches[t] = p_t (1 - p_t) w / tau. Cross-token
// derivatives are zero, so the N x C matrix is the full Jacobian.
Matrix score_jacobian(const Matrix& patches, const ScoringHead& head, double tau);

}  // namespace catp
