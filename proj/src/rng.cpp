#include "bip/rng.hpp"

namespace bip {

double sample_inverse_gaussian(double mu, double shape, Stream& rng) {
  const double nu = rng.normal();
  const double y = nu * nu;
  // Smaller root of the quadratic, written as mu / (1 + w + sqrt(w(2 + w)))
  // to avoid cancellation when mu * y / shape is large.
  const double w = mu * y / (2.0 * shape);
  const double x = mu / (1.0 + w + std::sqrt(w * (2.0 + w)));
  if (rng.uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

}  // namespace bip
