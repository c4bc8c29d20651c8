#include "ggk/chart.hpp"

namespace ggk {

Jet Chart::tau(const std::vector<Jet>&) const { throw GeometryError("chart has no tau"); }

std::vector<Jet> Chart::killing(const std::vector<Jet>&) const {
  throw GeometryError("chart has no circle-action generator");
}

FunctionChart::FunctionChart(int complex_dim, JetFn potential, JetFn tau, JetFieldFn killing,
                             std::function<bool(const Vec&)> domain)
    : n_(complex_dim), K_(std::move(potential)), tau_(std::move(tau)), u_(std::move(killing)),
      domain_(std::move(domain)) {}

Jet FunctionChart::tau(const std::vector<Jet>& x) const {
  if (!tau_) return Chart::tau(x);
  return tau_(x);
}

std::vector<Jet> FunctionChart::killing(const std::vector<Jet>& x) const {
  if (!u_) return Chart::killing(x);
  return u_(x);
}

}  // namespace ggk
