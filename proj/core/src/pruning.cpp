#include "catp/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "catp/numerics.hpp"

namespace catp {

void PruneThresholds::validate() const {
  if (!(theta_d >= 0.0 && theta_d <= 1.0) || !(theta_u >= 0.0 && theta_u <= 1.0)) {
    throw std::invalid_argument("thresholds: theta_d and theta_u must lie in [0, 1]");
  }
  if (theta_d > theta_u) {
    throw std::invalid_argument("thresholds: theta_d must not exceed theta_u");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("thresholds: tau must be positive");
  }
}

std::size_t DecisionMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<double> score_tokens(const Matrix& patches, const ScoringHead& head,
                                 double tau) {
  if (head.weight.size() != patches.cols()) {
    throw std::invalid_argument("score_tokens: head weight length != embed_dim");
  }
  std::vector<double> scores(patches.rows());
  for (std::size_t t = 0; t < patches.rows(); ++t) {
    double logit = head.bias;
    const auto row = patches.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) logit += row[j] * head.weight[j];
    scores[t] = sigmoid_temp(logit, tau);
  }
  return scores;
}

Partition partition_tokens(std::span<const double> scores,
                           const PruneThresholds& thresholds) {
  thresholds.validate();
  Partition out;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (scores[t] < thresholds.theta_d) {
      out.low.push_back(t);
    } else if (scores[t] > thresholds.theta_u) {
      out.high.push_back(t);
    } else {
      out.mid.push_back(t);
    }
  }
  return out;
}

std::size_t fallback_keep_slot(std::span<const double> scores, const IndexMap& entering) {
  if (scores.empty() || scores.size() != entering.size()) {
    throw std::invalid_argument("fallback_keep_slot: scores and index map must match");
  }
  std::size_t best = 0;
  double best_dist = std::abs(scores[0] - 0.5);
  for (std::size_t t = 1; t < scores.size(); ++t) {
    const double dist = std::abs(scores[t] - 0.5);
    if (dist < best_dist ||
        (dist == best_dist && entering.slots[t] < entering.slots[best])) {
      best = t;
      best_dist = dist;
    }
  }
  return best;
}

void move_to_mid(Partition& partition, std::size_t slot) {
  auto drop = [slot](std::vector<std::size_t>& set) {
    const auto it = std::find(set.begin(), set.end(), slot);
    if (it == set.end()) return false;
    set.erase(it);
    return true;
  };
  if (!drop(partition.low) && !drop(partition.high)) {
    throw std::invalid_argument("move_to_mid: slot not in low or high");
  }
  partition.mid.insert(
      std::upper_bound(partition.mid.begin(), partition.mid.end(), slot), slot);
}

DecisionMask make_mask(const Partition& partition, std::size_t entering_count) {
  DecisionMask mask;
  mask.bits.assign(entering_count, 0);
  for (std::size_t t : partition.mid) {
    if (t >= entering_count) {
      throw std::invalid_argument("make_mask: mid index out of range");
    }
    mask.bits[t] = 1;
  }
  return mask;
}

TokenSequence gather_retained(const TokenSequence& seq, const DecisionMask& mask) {
  if (mask.bits.size() != seq.patches.rows()) {
    throw std::invalid_argument("gather_retained: mask length != patch count");
  }
  TokenSequence out;
  out.cls = seq.cls;
  const std::size_t kept = mask.popcount();
  out.patches = Matrix(kept, seq.patches.cols());
  out.index_map.slots.reserve(kept);
  std::size_t next = 0;
  for (std::size_t t = 0; t < mask.bits.size(); ++t) {
    if (!mask.bits[t]) continue;
    out.patches.set_row(next++, seq.patches.row(t));
    out.index_map.slots.push_back(seq.index_map.slots[t]);
  }
  return out;
}

Matrix score_jacobian(const Matrix& patches, const ScoringHead& head, double tau) {
  const std::vector<double> scores = score_tokens(patches, head, tau);
  Matrix jac(patches.rows(), patches.cols());
  for (std::size_t t = 0; t < patches.rows(); ++t) {
    const double gain = scores[t] * (1.0 - scores[t]) / tau;
    for (std::size_t j = 0; j < patches.cols(); ++j) {
      jac(t, j) = gain * head.weight[j];
    }
  }
  return jac;
}

}  // namespace catp
