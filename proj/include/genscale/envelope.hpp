#pragma once

namespace genscale {

/// Parameters+tokens law coefficients and the FLOP conversion C = c * N * D.
struct EnvelopeInputs {
  double beta = 1.0;
  double gamma = 1.0;
  double a = 1.0;  ///< N0
  double b = 1.0;  ///< D0
  double c = 6.0;
  double e0 = 0.0;

  /// Throws std::invalid_argument on non-positive beta/gamma/a/b/c or negative e0.
  void validate() const;
};

/// Compute law implied by taking the compute-optimal (N, D) split.
struct EnvelopeOutputs {
  double alpha;
  double c0;
  double e;
};

struct Allocation {
  double n_star;
  double d_star;
};

EnvelopeOutputs envelope_map(const EnvelopeInputs& inp);
Allocation optimal_allocation(const EnvelopeInputs& inp, double compute);

/// Phi(r) = gamma/(beta+gamma) r^-beta + beta/(beta+gamma) r^gamma, >= 1.
double misallocation_penalty(double beta, double gamma, double r);

/// Loss at compute C when N = r * N*(C) and D = D*(C) / r.
double off_envelope_loss(const EnvelopeInputs& inp, double compute, double r);

/// Asymptotic compute exponent when N and D grow at a fixed ratio.
double fixed_ratio_path_slope(double beta, double gamma);

}  // namespace genscale
