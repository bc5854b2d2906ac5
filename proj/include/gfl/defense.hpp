// defense.hpp -- posterior-noise defenses: zero-mean Laplace or Gaussian noise
// on each queried posterior vector, optionally projected back onto the simplex.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfl/common.hpp"

namespace gfl {

enum class DefenseKind { None, Laplace, Gaussian };

inline const char* defense_name(DefenseKind k) {
  switch (k) {
    case DefenseKind::None: return "none";
    case DefenseKind::Laplace: return "laplace";
    case DefenseKind::Gaussian: return "gaussian";
  }
  return "?";
}

inline DefenseKind defense_from_name(const std::string& s) {
  if (s == "none") return DefenseKind::None;
  if (s == "laplace") return DefenseKind::Laplace;
  if (s == "gaussian") return DefenseKind::Gaussian;
  throw ConfigError("unknown defense '" + s + "' (expected none|laplace|gaussian)");
}

struct DefenseSetting {
  DefenseKind kind = DefenseKind::None;
  double strength = 0.0;  // Laplace scale lambda or Gaussian std sigma
  bool renormalize = true;

  void validate() const {
    if (strength < 0.0) throw std::invalid_argument("defense strength must be >= 0");
  }
};

inline double sample_laplace(double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double x = u(rng);
  double s = x < 0.0 ? -1.0 : 1.0;
  return -scale * s * std::log1p(-2.0 * std::abs(x));
}

// Adds i.i.d. noise per coordinate; with renormalize, clips negatives to zero
// and rescales to sum 1 (uniform fallback when everything clips to zero).
// Identity when the defense is off or strength is zero.
inline std::vector<double> apply_defense(const std::vector<double>& posterior,
                                         const DefenseSetting& setting, std::mt19937_64& rng) {
  setting.validate();
  if (setting.kind == DefenseKind::None || setting.strength == 0.0) return posterior;
  std::vector<double> out = posterior;
  if (setting.kind == DefenseKind::Laplace) {
    for (double& v : out) v += sample_laplace(setting.strength, rng);
  } else {
    std::normal_distribution<double> gauss(0.0, setting.strength);
    for (double& v : out) v += gauss(rng);
  }
  if (setting.renormalize) {
    double sum = 0.0;
    for (double& v : out) {
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (sum > 0.0) {
      for (double& v : out) v /= sum;
    } else {
      for (double& v : out) v = 1.0 / static_cast<double>(out.size());
    }
  }
  return out;
}

}  // namespace gfl
