#include "genscale/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace genscale {

namespace {

void require_pos(double v, const char* name) {
  if (!(v > 0.0 && std::isfinite(v)))
    throw std::invalid_argument(std::string(name) + " must be finite and > 0");
}

}  // namespace

void EnvelopeInputs::validate() const {
  require_pos(beta, "beta");
  require_pos(gamma, "gamma");
  require_pos(a, "N0");
  require_pos(b, "D0");
  require_pos(c, "c");
  if (!(e0 >= 0.0 && std::isfinite(e0))) throw std::invalid_argument("e0 must be finite and >= 0");
}

EnvelopeOutputs envelope_map(const EnvelopeInputs& inp) {
  inp.validate();
  const double s = inp.beta + inp.gamma;
  const double wb = inp.beta / s;
  const double wg = inp.gamma / s;
  const double alpha = inp.beta * inp.gamma / s;
  const double log_c0 = std::log(s) - wb * std::log(inp.beta) - wg * std::log(inp.gamma) +
                        wg * std::log(inp.a) + wb * std::log(inp.b) + alpha * std::log(inp.c);
  return {alpha, std::exp(log_c0), inp.e0};
}

Allocation optimal_allocation(const EnvelopeInputs& inp, double compute) {
  inp.validate();
  require_pos(compute, "compute");
  const double s = inp.beta + inp.gamma;
  const double log_budget = std::log(compute) - std::log(inp.c);  // log(N D)
  const double log_ratio =
      (std::log(inp.beta) + std::log(inp.a) - std::log(inp.gamma) - std::log(inp.b)) / s;
  const double log_n = log_ratio + inp.gamma / s * log_budget;
  const double log_d = -log_ratio + inp.beta / s * log_budget;
  return {std::exp(log_n), std::exp(log_d)};
}

double misallocation_penalty(double beta, double gamma, double r) {
  require_pos(beta, "beta");
  require_pos(gamma, "gamma");
  require_pos(r, "r");
  // 1 + [gamma (r^-beta - 1) + beta (r^gamma - 1)] / (beta + gamma), exact at r = 1.
  const double t = std::log(r);
  const double excess = gamma * std::expm1(-beta * t) + beta * std::expm1(gamma * t);
  return 1.0 + excess / (beta + gamma);
}

double off_envelope_loss(const EnvelopeInputs& inp, double compute, double r) {
  const EnvelopeOutputs env = envelope_map(inp);
  require_pos(compute, "compute");
  const double phi = misallocation_penalty(inp.beta, inp.gamma, r);
  return env.e + std::exp(std::log(env.c0) - env.alpha * std::log(compute)) * phi;
}

double fixed_ratio_path_slope(double beta, double gamma) {
  require_pos(beta, "beta");
  require_pos(gamma, "gamma");
  return std::min(beta, gamma) / 2.0;
}

}  // namespace genscale
