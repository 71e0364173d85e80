#pragma once

#include <random>
#include <vector>

#include "credalboot/credalboot.hpp"

namespace testutil {

using credalboot::Matrix;
using credalboot::Vector;

inline Matrix random_spd(int d, std::mt19937_64& rng, double ridge = 0.2) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix a(d, d);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) a(r, s) = z(rng);
  Matrix out = a * a.transpose() / d + ridge * Matrix::Identity(d, d);
  return 0.5 * (out + out.transpose());
}

inline Vector random_simplex(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector v(k);
  for (int i = 0; i < k; ++i) v[i] = e(rng);
  return v / v.sum();
}

inline credalboot::MixtureParams random_params(int c, int d, credalboot::ModelTag tag, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 2.0);
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  const Matrix shared = random_spd(d, rng);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  const double lambda = u(rng);
  for (int k = 0; k < c; ++k) {
    Vector mu(d);
    for (int a = 0; a < d; ++a) mu[a] = z(rng);
    means.push_back(mu);
    switch (tag) {
      case credalboot::ModelTag::EII: covs.push_back(lambda * Matrix::Identity(d, d)); break;
      case credalboot::ModelTag::EEE: covs.push_back(shared); break;
      case credalboot::ModelTag::VVV: covs.push_back(random_spd(d, rng)); break;
    }
  }
  Vector w = random_simplex(c, rng);
  w /= w.sum();
  return credalboot::MixtureParams(w, means, covs, tag);
}

inline Matrix random_points(int n, int d, std::mt19937_64& rng, double scale = 3.0) {
  std::normal_distribution<double> z(0.0, scale);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) x(i, a) = z(rng);
  return x;
}

}  // namespace testutil
