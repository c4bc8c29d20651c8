#pragma once

// Holomorphic charts carrying a Kahler potential, an invariant function tau
// and a circle-action generator.  Real coordinates are ordered
// (x1, y1, ..., xn, yn) with z = x + i y.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ggk/jet.hpp"
#include "ggk/linalg.hpp"

namespace ggk {

class Chart {
 public:
  virtual ~Chart() = default;
  virtual int complex_dim() const = 0;
  int real_dim() const { return 2 * complex_dim(); }

  // Kahler potential K; the metric is g = 2 Re(dd-bar K) in real form.
  virtual Jet potential(const std::vector<Jet>& x) const = 0;
  // Invariant function tau (optional).
  virtual bool has_tau() const { return false; }
  virtual Jet tau(const std::vector<Jet>& x) const;
  // Real components of the circle-action generator (optional).
  virtual bool has_killing() const { return false; }
  virtual std::vector<Jet> killing(const std::vector<Jet>& x) const;
  // False where the chart degenerates.
  virtual bool in_domain(const Vec& x) const { (void)x; return true; }
};

using ChartPtr = std::shared_ptr<const Chart>;

using JetFn = std::function<Jet(const std::vector<Jet>&)>;
using JetFieldFn = std::function<std::vector<Jet>(const std::vector<Jet>&)>;

// Chart assembled from callables; convenient for tests and simple models.
class FunctionChart : public Chart {
 public:
  FunctionChart(int complex_dim, JetFn potential, JetFn tau = nullptr, JetFieldFn killing = nullptr,
                std::function<bool(const Vec&)> domain = nullptr);
  int complex_dim() const override { return n_; }
  Jet potential(const std::vector<Jet>& x) const override { return K_(x); }
  bool has_tau() const override { return static_cast<bool>(tau_); }
  Jet tau(const std::vector<Jet>& x) const override;
  bool has_killing() const override { return static_cast<bool>(u_); }
  std::vector<Jet> killing(const std::vector<Jet>& x) const override;
  bool in_domain(const Vec& x) const override { return domain_ ? domain_(x) : true; }

 private:
  int n_;
  JetFn K_, tau_;
  JetFieldFn u_;
  std::function<bool(const Vec&)> domain_;
};

}  // namespace ggk
