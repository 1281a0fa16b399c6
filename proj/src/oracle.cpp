#include "snntcl/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace snntcl::oracle {

double oracle_contrastive(const std::vector<std::vector<std::vector<double>>>& z,
                          const std::vector<int>& labels, double tau,
                          bool supervised) {
  const std::size_t B = z.size();
  if (B == 0 || labels.size() != B)
    throw std::invalid_argument("oracle_contrastive: bad bank");
  const std::size_t T = z[0].size();
  const std::size_t D = z[0][0].size();

  auto dot = [&](std::size_t i, std::size_t t, std::size_t k, std::size_t t2) {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) s += z[i][t][d] * z[k][t2][d];
    return s;
  };

  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t class_size = 0;
    for (std::size_t q = 0; q < B; ++q)
      if (labels[q] == labels[i]) ++class_size;
    for (std::size_t t = 0; t < T; ++t) {
      // log-sum-exp over every (k, t'') != (i, t)
      double m = -1e300;
      for (std::size_t k = 0; k < B; ++k)
        for (std::size_t t2 = 0; t2 < T; ++t2) {
          if (k == i && t2 == t) continue;
          m = std::fmax(m, dot(i, t, k, t2) / tau);
        }
      double denom = 0.0;
      for (std::size_t k = 0; k < B; ++k)
        for (std::size_t t2 = 0; t2 < T; ++t2) {
          if (k == i && t2 == t) continue;
          denom += std::exp(dot(i, t, k, t2) / tau - m);
        }
      const double lse = std::log(denom) + m;
      for (std::size_t p = 0; p < B; ++p)
        for (std::size_t t2 = 0; t2 < T; ++t2) {
          bool positive;
          double w;
          if (supervised) {
            positive = labels[p] == labels[i] && !(p == i && t2 == t);
            w = 1.0 / static_cast<double>(class_size);
          } else {
            positive = p == i && t2 != t;
            w = 1.0;
          }
          if (!positive) continue;
          total -= w * (dot(i, t, p, t2) / tau - lse);
        }
    }
  }
  return total / static_cast<double>(T);
}

LifTrace oracle_lif(const std::vector<double>& inputs,
                    const LifScalarParams& params) {
  LifTrace trace;
  double u = 0.0;
  for (double x : inputs) {
    const double u_pre = params.alpha * u + x;
    const double y = u_pre - params.v_th >= 0.0 ? 1.0 : 0.0;
    u = u_pre * (1.0 - y);
    trace.u_pre.push_back(u_pre);
    trace.spikes.push_back(y);
    trace.u.push_back(u);
  }
  return trace;
}

double oracle_ce(const std::vector<double>& logits, int label) {
  double m = logits.at(0);
  for (double v : logits) m = std::fmax(m, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return -(logits.at(static_cast<std::size_t>(label)) - m - std::log(z));
}

}  // namespace snntcl::oracle
