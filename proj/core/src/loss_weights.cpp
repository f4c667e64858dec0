#include "msti/loss_weights.hpp"

#include <string>

#include "msti/parser.hpp"

namespace msti {

WeightMask weight_mask(std::string_view target,
                       const std::vector<TokenSpan>& tokens,
                       double lambda_coord) {
  if (lambda_coord < 1.0) {
    throw Error(errc::invalid_parameter, "lambda_coord must be >= 1");
  }
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenSpan& t = tokens[i];
    if (t.end < t.start || t.end > target.size() ||
        (i > 0 && t.start < prev_end)) {
      throw Error(errc::bad_spans, "token " + std::to_string(i));
    }
    prev_end = t.end;
  }

  const std::vector<CoordSpan> coords = extract_coordinate_spans(target);
  WeightMask mask;
  mask.weights.assign(tokens.size(), 1.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const CoordSpan& c : coords) {
      if (tokens[i].start < c.end && c.start < tokens[i].end) {
        mask.weights[i] = lambda_coord;
        break;
      }
    }
  }
  return mask;
}

double weighted_nll(const std::vector<double>& logprobs,
                    const WeightMask& mask) {
  if (logprobs.size() != mask.weights.size()) {
    throw Error(errc::length_mismatch,
                std::to_string(logprobs.size()) + " logprobs vs " +
                    std::to_string(mask.weights.size()) + " weights");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (logprobs[i] > 0.0) {
      throw Error(errc::positive_logprob, "index " + std::to_string(i));
    }
    loss -= mask.weights[i] * logprobs[i];
  }
  return loss;
}

}  // namespace msti
