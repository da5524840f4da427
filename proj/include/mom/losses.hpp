#pragma once

// Convex Lipschitz losses l(u, y) evaluated at a prediction u for an output y.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "mom/errors.hpp"

namespace mom {

enum class LossFamily { Logistic, Hinge, Huber, Quantile };

class LossSpec {
 public:
  static LossSpec logistic() { return LossSpec(LossFamily::Logistic, 0.0, 0.0); }
  static LossSpec hinge() { return LossSpec(LossFamily::Hinge, 0.0, 0.0); }

  static LossSpec huber(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
      throw ArgumentError("huber loss requires a finite delta > 0");
    }
    return LossSpec(LossFamily::Huber, delta, 0.0);
  }

  static LossSpec quantile(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("quantile loss requires 0 < tau < 1");
    return LossSpec(LossFamily::Quantile, 0.0, tau);
  }

  // Absolute-deviation loss in the quantile parametrisation: |y - u| / 2.
  static LossSpec l1() { return quantile(0.5); }

  LossFamily family() const noexcept { return family_; }
  double delta() const noexcept { return delta_; }
  double tau() const noexcept { return tau_; }

  bool is_classification() const noexcept {
    return family_ == LossFamily::Logistic || family_ == LossFamily::Hinge;
  }

  // Lipschitz constant in u. Quantile reports 1 even though max(tau, 1 - tau)
  // is tighter.
  double lipschitz() const noexcept { return family_ == LossFamily::Huber ? delta_ : 1.0; }

  double value(double u, double y) const {
    check(u, y);
    switch (family_) {
      case LossFamily::Logistic: {
        // log(1 + exp(z)) without overflow
        const double z = -y * u;
        return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      }
      case LossFamily::Hinge:
        return std::max(1.0 - u * y, 0.0);
      case LossFamily::Huber: {
        const double r = std::abs(y - u);
        return r <= delta_ ? 0.5 * r * r : delta_ * r - 0.5 * delta_ * delta_;
      }
      case LossFamily::Quantile: {
        const double r = y - u;
        return r > 0.0 ? tau_ * r : (tau_ - 1.0) * r;
      }
    }
    return 0.0;
  }

  // Minimum-norm element of the subdifferential in u.
  double subgrad(double u, double y) const {
    check(u, y);
    switch (family_) {
      case LossFamily::Logistic:
        // -y / (1 + exp(y u)), written to avoid overflow for large |u|
        {
          const double m = y * u;
          const double s = m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
          return -y * s;
        }
      case LossFamily::Hinge: {
        const double m = u * y;
        if (m < 1.0) return -y;
        return 0.0;  // flat side, and 0 is the min-norm point of conv{-y, 0} at the kink
      }
      case LossFamily::Huber: {
        const double r = y - u;
        if (r > delta_) return -delta_;
        if (r < -delta_) return delta_;
        return -r;
      }
      case LossFamily::Quantile: {
        const double r = y - u;
        if (r > 0.0) return -tau_;
        if (r < 0.0) return 1.0 - tau_;
        return 0.0;
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (family_) {
      case LossFamily::Logistic: return "logistic";
      case LossFamily::Hinge: return "hinge";
      case LossFamily::Huber: return "huber";
      case LossFamily::Quantile: return "quantile";
    }
    return "unknown";
  }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;

 private:
  LossSpec(LossFamily family, double delta, double tau) : family_(family), delta_(delta), tau_(tau) {}

  void check(double u, double y) const {
    if (!std::isfinite(u) || !std::isfinite(y)) throw DomainError("loss evaluated at a non-finite point");
    if (is_classification() && y != 1.0 && y != -1.0) {
      throw DomainError(name() + " loss requires labels in {-1, +1}");
    }
  }

  LossFamily family_;
  double delta_;
  double tau_;
};

inline double loss_value(const LossSpec& loss, double u, double y) { return loss.value(u, y); }
inline double loss_subgrad(const LossSpec& loss, double u, double y) { return loss.subgrad(u, y); }
inline double lipschitz(const LossSpec& loss) { return loss.lipschitz(); }

// Parses "logistic", "hinge", "huber", "quantile", "l1". Parameters are
// passed separately because only two families carry one.
inline LossSpec parse_loss(std::string_view name, double delta = 1.0, double tau = 0.5) {
  if (name == "logistic") return LossSpec::logistic();
  if (name == "hinge") return LossSpec::hinge();
  if (name == "huber") return LossSpec::huber(delta);
  if (name == "quantile") return LossSpec::quantile(tau);
  if (name == "l1") return LossSpec::l1();
  throw ArgumentError("unknown loss '" + std::string(name) + "'");
}

}  // namespace mom
