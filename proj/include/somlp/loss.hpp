#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace somlp {

struct SoftmaxXent {
  double loss;
  std::vector<float> grad;  // softmax(logits) - onehot(label)
};

// Cross-entropy on softmax with max-subtraction for stability.
inline SoftmaxXent softmax_xent(std::span<const float> logits, std::size_t label) {
  if (label >= logits.size())
    throw std::invalid_argument("softmax_xent: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) + " classes");
  const float max_logit = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  std::vector<float> grad(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k)
    denom += std::exp(static_cast<double>(logits[k]) - max_logit);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double p = std::exp(static_cast<double>(logits[k]) - max_logit) / denom;
    grad[k] = static_cast<float>(p - (k == label ? 1.0 : 0.0));
  }
  const double loss =
      std::log(denom) - (static_cast<double>(logits[label]) - max_logit);
  return {loss, std::move(grad)};
}

}  // namespace somlp
