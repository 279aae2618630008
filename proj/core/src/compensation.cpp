#include "catp/compensation.hpp"

#include <stdexcept>

namespace catp {

namespace {

Prototype combine(const Matrix& features, std::vector<double> weights, ProtoOrigin origin) {
  Prototype proto;
  proto.origin = origin;
  proto.source_count = features.rows();
  proto.feature.assign(features.cols(), 0.0);
  for (std::size_t t = 0; t < features.rows(); ++t) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      proto.feature[j] += weights[t] * features(t, j);
    }
  }
  proto.weight_vector = std::move(weights);
  return proto;
}

void check_scores(const Matrix& features, std::span<const double> scores) {
  if (scores.size() != features.rows()) {
    throw std::invalid_argument("aggregate: one score per source row required");
  }
}

}  // namespace

std::optional<Prototype> aggregate_low(const Matrix& features,
                                       std::span<const double> scores) {
  check_scores(features, scores);
  if (features.rows() == 0) return std::nullopt;
  double sum = 0.0;
  for (double p : scores) sum += p;
  std::vector<double> weights(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) weights[t] = scores[t] / sum;
  return combine(features, std::move(weights), ProtoOrigin::low);
}

std::optional<Prototype> aggregate_high(const Matrix& features,
                                        std::span<const double> scores) {
  check_scores(features, scores);
  if (features.rows() == 0) return std::nullopt;
  double sum = 0.0;
  for (double p : scores) sum += 1.0 - p;
  std::vector<double> weights(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) weights[t] = (1.0 - scores[t]) / sum;
  return combine(features, std::move(weights), ProtoOrigin::high);
}

std::optional<Prototype> aggregate_average(const Matrix& features,
                                           std::span<const double> scores,
                                           ProtoOrigin origin) {
  check_scores(features, scores);
  if (features.rows() == 0) return std::nullopt;
  std::vector<double> weights(features.rows(), 1.0 / static_cast<double>(features.rows()));
  return combine(features, std::move(weights), origin);
}

TokenSequence rebuild_sequence(std::span<const double> cls, const Matrix& mid_patches,
                               const IndexMap& mid_index,
                               const std::optional<Prototype>& proto_low,
                               const std::optional<Prototype>& proto_high) {
  if (mid_index.size() != mid_patches.rows()) {
    throw std::invalid_argument("rebuild_sequence: index map length != patch count");
  }
  TokenSequence seq;
  seq.cls.assign(cls.begin(), cls.end());
  seq.patches = mid_patches;
  seq.index_map = mid_index;
  if (proto_low) seq.prototypes.push_back({proto_low->feature, proto_low->origin});
  if (proto_high) seq.prototypes.push_back({proto_high->feature, proto_high->origin});
  return seq;
}

}  // namespace catp
