#pragma once

namespace rvla::sim {

template <class Rng>
std::vector<Vec2> place_points(Rng& rng, int count, double lo, double hi, double sep,
                               const std::vector<Vec2>& fixed) {
  std::vector<Vec2> taken = fixed;
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    double need = sep;
    Vec2 p;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 0 && attempt % 100 == 0) need *= 0.8;
      p = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
      bool clear = true;
      for (const Vec2& q : taken) clear = clear && distance(p, q) >= need;
      if (clear) break;
    }
    taken.push_back(p);
    out.push_back(p);
  }
  return out;
}

}  // namespace rvla::sim
