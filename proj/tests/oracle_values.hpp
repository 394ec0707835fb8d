#pragma once

// Reference values computed offline at 40 digits by
// tests/oracles/scalar_oracles.py (mpmath). Frozen here; not recomputed.

namespace oracle {

inline constexpr double kSigmoid1 = 0.7310585786300048792;
inline constexpr double kTanh1 = 0.7615941559557648881;

// Zero parameters, c_prev = 1: c = 0.5, h = 0.5 tanh(0.5).
inline constexpr double kZeroLstmH = 0.2310585786300048792;
inline constexpr double kZeroLstmC = 0.5;

// One cell, every weight and bias 1, x = [1], from (h, c) = (0, 0).
inline constexpr double kOnesStep1H = 0.6082834181835158944;
inline constexpr double kOnesStep1C = 0.8491126756208685959;
// Second step with the same input, from step 1's state.
inline constexpr double kOnesStep2H = 0.9160604132348527104;
inline constexpr double kOnesStep2C = 1.782160466942240926;

// Importance with W1 = W2 = w_out = 1, b = 0, h_i = 0.3, h_N = 0.2.
inline constexpr double kImportanceScalar = 0.4621171572600097585;

// AdaDelta first step, g = 1, rho 0.95, eps 1e-6.
inline constexpr double kAdaDeltaFirstDelta = -0.004472091234310838610;

inline constexpr double kLn4 = 1.386294361119890619;
inline constexpr double kLn2 = 0.6931471805599453094;

}  // namespace oracle
