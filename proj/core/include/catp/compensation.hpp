#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "catp/encoder.hpp"
#include "catp/matrix.hpp"

namespace catp {

enum class CompensationMode { none, average, weighted };

// Convex combination of one pruned subset's features. `weight_vector` holds
// the normalized per-source weights in subset order and sums to 1.
struct Prototype {
  std::vector<double> feature;
  ProtoOrigin origin;
  std::size_t source_count = 0;
  std::vector<double> weight_vector;
};

// Weights w_t = p_t / sum(p). Returns nullopt when the subset is empty.
std::optional<Prototype> aggregate_low(const Matrix& features,
                                       std::span<const double> scores);

// Weights w_t = (1 - p_t) / sum(1 - p). Returns nullopt when empty.
std::optional<Prototype> aggregate_high(const Matrix& features,
                                        std::span<const double> scores);

// Uniform weights 1/|subset|, for the ablation mode. Returns nullopt when
// empty. `origin` tags which slot the prototype fills.
std::optional<Prototype> aggregate_average(const Matrix& features,
                                           std::span<const double> scores,
                                           ProtoOrigin origin);

// Assembles [cls; mid patches; low prototype if present; high prototype if
// present]. The index map covers only the mid patches.
TokenSequence rebuild_sequence(std::span<const double> cls, const Matrix& mid_patches,
                               const IndexMap& mid_index,
                               const std::optional<Prototype>& proto_low,
                               const std::optional<Prototype>& proto_high);

}  // namespace catp
