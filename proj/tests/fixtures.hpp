#pragma once

#include "pcons/gain_synthesis.hpp"

// Bundled example systems used across the test suites: one 2-state plant pair
// with the published initial/optimal gains for both observer designs.
namespace fixtures {

using pcons::Matrix;
using pcons::PlantModel;
using pcons::SynthesisConfig;

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline PlantModel example1_plant() {
  PlantModel plant;
  plant.A = mat2(-10.18, 9.98, 10.3, -9.84);
  plant.H = mat2(0.698, -0.26, 0.682, -0.34);
  plant.B = Matrix(2, 1);
  plant.B << 0.7, 0.7;
  plant.C = mat2(0.7, -0.3, 0.1, 0.6);
  plant.beta = 1.0;
  plant.m_l = 0.9;
  plant.m_h = 1.2;
  return plant;
}

inline PlantModel example2_plant() {
  PlantModel plant;
  plant.A = mat2(-13.23, 8.72, 9.41, -11.35);
  plant.H = mat2(0.853, -0.35, 0.841, -0.44);
  plant.B = Matrix(2, 1);
  plant.B << 0.82, 0.82;
  plant.C = mat2(0.8, -0.4, 0.2, 0.5);
  plant.beta = 1.0;
  plant.m_l = 0.9;
  plant.m_h = 1.2;
  return plant;
}

inline Matrix example1_E0() { return mat2(17.1333, 21.8667, 12.3644, -3.5511); }
inline Matrix example2_E0() { return mat2(8.7937, 20.4750, 10.7813, -6.0750); }

inline Matrix example1_Eopt_alg1() { return mat2(-0.1724, 3.7982, 3.7982, 3.0183); }
inline Matrix example1_Eopt_alg2() { return mat2(-0.0124, 0.0905, 0.0905, 0.0784); }
inline Matrix example2_Eopt_alg1() { return mat2(-0.1345, 2.3014, 2.3014, 2.6486); }
inline Matrix example2_Eopt_alg2() { return mat2(-0.0005, 0.0019, 0.0019, 0.0041); }

inline Matrix example1_P() { return mat2(0.0219, 0.0112, 0.0112, 0.1357); }
inline Matrix example2_P() { return mat2(0.0219, 0.0113, 0.0113, 0.1357); }

inline Matrix example1_Sigma() { return mat2(-0.0215, -0.0004, -0.0004, -0.0198); }
inline Matrix example2_Sigma() { return mat2(-0.0207, -0.0022, -0.0022, -0.0080); }

inline double example1_h_norm() { return 1.0641; }
inline double example2_h_norm() { return 1.3218; }

inline SynthesisConfig example1_constants() {
  SynthesisConfig cfg;
  cfg.eta = 0.6;
  cfg.phi = 10.0;
  cfg.mu = 15.0;
  cfg.delta = 0.02;
  return cfg;
}

inline SynthesisConfig example2_constants() {
  SynthesisConfig cfg;
  cfg.eta = 0.6;
  cfg.phi = 30.0;
  cfg.mu = 410.0;
  cfg.delta = 0.02;
  return cfg;
}

}  // namespace fixtures
