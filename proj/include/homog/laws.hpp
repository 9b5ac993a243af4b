#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

/// Law of a nonnegative scalar random variable, sampled by inverse CDF.
///
/// Pareto(alpha, scale):        P(X > x) = (scale / x)^alpha on [scale, inf).
/// InversePareto(alpha, scale): P(X < x) = (x / scale)^alpha on (0, scale].
///   (1/X is Pareto(alpha, 1/scale); heavy mass near zero.)
///
/// All laws here have closed-form power moments, which the tests use as oracles.
class ScalarLaw {
 public:
  enum class Kind { Constant, Discrete, Pareto, InversePareto };

  static ScalarLaw constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
      throw std::invalid_argument("constant law needs a finite value >= 0");
    ScalarLaw law;
    law.kind_ = Kind::Constant;
    law.atoms_ = {value};
    law.probs_ = {1.0};
    return law;
  }

  static ScalarLaw discrete(std::vector<double> atoms, std::vector<double> probs) {
    if (atoms.empty() || atoms.size() != probs.size())
      throw std::invalid_argument("discrete law needs matching atoms/probs");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!(atoms[i] >= 0.0) || !std::isfinite(atoms[i]))
        throw std::invalid_argument("discrete law atoms must be finite and >= 0");
      if (!(probs[i] > 0.0)) throw std::invalid_argument("discrete law probs must be > 0");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("discrete law probs must sum to 1");
    ScalarLaw law;
    law.kind_ = Kind::Discrete;
    law.atoms_ = std::move(atoms);
    law.probs_ = std::move(probs);
    return law;
  }

  static ScalarLaw pareto(double alpha, double scale = 1.0) {
    check_shape(alpha, scale);
    ScalarLaw law;
    law.kind_ = Kind::Pareto;
    law.alpha_ = alpha;
    law.scale_ = scale;
    return law;
  }

  static ScalarLaw inverse_pareto(double alpha, double scale = 1.0) {
    check_shape(alpha, scale);
    ScalarLaw law;
    law.kind_ = Kind::InversePareto;
    law.alpha_ = alpha;
    law.scale_ = scale;
    return law;
  }

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double scale() const noexcept { return scale_; }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  /// Inverse CDF at u in (0, 1).
  double quantile(double u) const {
    switch (kind_) {
      case Kind::Constant:
        return atoms_[0];
      case Kind::Discrete: {
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < atoms_.size(); ++i) {
          cum += probs_[i];
          if (u < cum) return atoms_[i];
        }
        return atoms_.back();
      }
      case Kind::Pareto:
        return scale_ * std::pow(u, -1.0 / alpha_);
      case Kind::InversePareto:
        return scale_ * std::pow(u, 1.0 / alpha_);
    }
    return 0.0;
  }

  /// True when the law puts no mass at zero (needed for diagonal weights).
  bool strictly_positive() const {
    if (kind_ == Kind::Pareto || kind_ == Kind::InversePareto) return true;
    return std::all_of(atoms_.begin(), atoms_.end(), [](double a) { return a > 0.0; });
  }

  /// Law of X^q for q != 0.
  ScalarLaw power(double q) const {
    if (q == 0.0) return constant(1.0);
    ScalarLaw out;
    switch (kind_) {
      case Kind::Constant:
      case Kind::Discrete: {
        out = *this;
        for (double& a : out.atoms_) {
          if (a == 0.0 && q < 0.0)
            a = std::numeric_limits<double>::infinity();
          else
            a = std::pow(a, q);
        }
        return out;
      }
      case Kind::Pareto:
        out.kind_ = q > 0.0 ? Kind::Pareto : Kind::InversePareto;
        break;
      case Kind::InversePareto:
        out.kind_ = q > 0.0 ? Kind::InversePareto : Kind::Pareto;
        break;
    }
    out.alpha_ = alpha_ / std::abs(q);
    out.scale_ = std::pow(scale_, q);
    return out;
  }

  /// E[X]; +inf when the mean diverges.
  double mean() const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::Constant:
      case Kind::Discrete: {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) s += probs_[i] * atoms_[i];
        return s;
      }
      case Kind::Pareto:
        return alpha_ > 1.0 ? scale_ * alpha_ / (alpha_ - 1.0) : inf;
      case Kind::InversePareto:
        return scale_ * alpha_ / (alpha_ + 1.0);
    }
    return inf;
  }

  /// E[X^q]; +inf when divergent.
  double moment(double q) const { return power(q).mean(); }

  /// E[(X - k)_+], the mass above level k.
  double tail_mass(double k) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::Constant:
      case Kind::Discrete: {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i)
          s += probs_[i] * std::max(atoms_[i] - k, 0.0);
        return s;
      }
      case Kind::Pareto: {
        if (alpha_ <= 1.0) return inf;
        if (k <= scale_) return mean() - k;
        return std::pow(scale_, alpha_) * std::pow(k, 1.0 - alpha_) / (alpha_ - 1.0);
      }
      case Kind::InversePareto: {
        if (k >= scale_) return 0.0;
        if (k <= 0.0) return mean() - k;
        return (scale_ - k) -
               scale_ / (alpha_ + 1.0) * (1.0 - std::pow(k / scale_, alpha_ + 1.0));
      }
    }
    return inf;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Constant:
        return "constant(" + std::to_string(atoms_[0]) + ")";
      case Kind::Discrete:
        return "discrete(" + std::to_string(atoms_.size()) + " atoms)";
      case Kind::Pareto:
        return "pareto(alpha=" + std::to_string(alpha_) + ")";
      case Kind::InversePareto:
        return "inverse_pareto(alpha=" + std::to_string(alpha_) + ")";
    }
    return "?";
  }

 private:
  static void check_shape(double alpha, double scale) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("tail index alpha must be > 0");
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("scale must be > 0");
  }

  Kind kind_ = Kind::Constant;
  std::vector<double> atoms_{0.0};
  std::vector<double> probs_{1.0};
  double alpha_ = 1.0;
  double scale_ = 1.0;
};

}  // namespace homog
