#include "trimfit/capped_simplex.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace trimfit {

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double h) {
  const int n = static_cast<int>(v.size());
  if (n == 0) throw std::invalid_argument("project_capped_simplex: empty input");
  if (!(h >= 0.0 && h <= static_cast<double>(n)))
    throw std::invalid_argument("project_capped_simplex: h outside [0, n]");

  auto clip_at = [&](double mu) {
    Eigen::VectorXd w = (v.array() + mu).cwiseMax(0.0).cwiseMin(1.0);
    return w;
  };

  if (h == 0.0) return Eigen::VectorXd::Zero(n);
  if (h == static_cast<double>(n)) return Eigen::VectorXd::Ones(n);

  // Events where a coordinate enters (starts growing from 0) or saturates
  // (hits 1) as mu increases. Between events S(mu) = sum clip(v + mu, 0, 1)
  // is linear with slope = #unclamped coordinates.
  struct Event {
    double mu;
    int slope_change;  // +1 enter, -1 saturate
  };
  std::vector<Event> ev;
  ev.reserve(static_cast<size_t>(2 * n));
  for (int j = 0; j < n; ++j) {
    ev.push_back({-v[j], +1});
    ev.push_back({1.0 - v[j], -1});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.mu < b.mu; });

  // Below the first event every coordinate clips to 0, so S = 0 there.
  double S = 0.0;
  int slope = 0;
  size_t k = 0;
  double mu_prev = ev.front().mu;
  while (k < ev.size()) {
    // advance S across the segment [mu_prev, ev[k].mu]
    const double mu_next = ev[k].mu;
    const double S_next = S + slope * (mu_next - mu_prev);
    if (S_next >= h && slope > 0) {
      return clip_at(mu_prev + (h - S) / slope);
    }
    S = S_next;
    mu_prev = mu_next;
    // absorb all events at this mu
    while (k < ev.size() && ev[k].mu == mu_next) {
      slope += ev[k].slope_change;
      ++k;
    }
    if (S == h && slope >= 0) return clip_at(mu_prev);
  }
  // h < n was checked, so the crossing must have been found; reaching here
  // means accumulated roundoff pushed S just below h at the last event.
  return clip_at(mu_prev);
}

}  // namespace trimfit
