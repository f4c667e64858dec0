#pragma once

#include <string_view>
#include <vector>

#include "msti/core.hpp"

namespace msti {

inline constexpr double kLambdaCoordDefault = 10.0;

struct TokenSpan {
  std::size_t index = 0;
  std::size_t start = 0;  // character offsets, half-open
  std::size_t end = 0;
};

struct WeightMask {
  std::vector<double> weights;
};

// A token is amplified to lambda_coord iff its character span intersects
// a coordinate digit run inside the Image Objects list; everything else
// keeps weight 1. Token spans must be ordered, nonoverlapping, and inside
// the target.
WeightMask weight_mask(std::string_view target,
                       const std::vector<TokenSpan>& tokens,
                       double lambda_coord);

// -sum_t weights[t] * logprobs[t]; logprobs must be <= 0.
double weighted_nll(const std::vector<double>& logprobs,
                    const WeightMask& mask);

}  // namespace msti
