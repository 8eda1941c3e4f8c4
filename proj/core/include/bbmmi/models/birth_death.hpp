#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bbmmi/rng.hpp"

namespace bbmmi::models {

/// Multi-dimensional birth-death health chain on Z_+^d: coordinate i gains
/// one at rate beta_i(x) and loses one at rate delta_i(x) (delta_i must
/// vanish when x_i = 0), with branch rate b(x) and kill rate kappa(x).
/// An optional per-coordinate cap truncates the state space to {0..cap}^d,
/// which also makes the chain enumerable for the oracle.
class BirthDeathModel {
 public:
  using State = std::vector<std::int32_t>;
  static constexpr std::int32_t kNoCap = -1;

  struct Spec {
    int dimension = 1;
    std::function<double(const State&, int)> birth;   // beta_i(x)
    std::function<double(const State&, int)> death;   // delta_i(x)
    std::function<double(const State&)> branch;       // b(x)
    std::function<double(const State&)> kill;         // kappa(x)
    double branch_bound = std::numeric_limits<double>::infinity();
    std::int32_t cap = kNoCap;
  };

  explicit BirthDeathModel(Spec spec) : spec_(std::move(spec)) {
    if (spec_.dimension < 1)
      throw std::invalid_argument("birth-death model needs dimension >= 1");
    if (!spec_.birth || !spec_.death)
      throw std::invalid_argument("birth-death model needs rate functions");
    if (!spec_.branch) spec_.branch = [](const State&) { return 0.0; };
    if (!spec_.kill) spec_.kill = [](const State&) { return 0.0; };
  }

  double motion_rate(const State& x) const {
    double total = 0;
    for (int i = 0; i < spec_.dimension; ++i) total += birth_at(x, i) + death_at(x, i);
    return total;
  }

  State sample_motion(const State& x, RngStream& rng) const {
    const double total = motion_rate(x);
    double u = rng.uniform01() * total;
    int pick_i = spec_.dimension - 1;
    bool pick_up = death_at(x, pick_i) == 0;
    for (int i = 0; i < spec_.dimension; ++i) {
      const double up = birth_at(x, i);
      if ((u -= up) < 0 && up > 0) {
        pick_i = i;
        pick_up = true;
        break;
      }
      const double down = death_at(x, i);
      if ((u -= down) < 0 && down > 0) {
        pick_i = i;
        pick_up = false;
        break;
      }
    }
    State next = x;
    next[static_cast<std::size_t>(pick_i)] += pick_up ? 1 : -1;
    return next;
  }

  double branch_rate(const State& x) const { return spec_.branch(x); }
  double kill_rate(const State& x) const { return spec_.kill(x); }
  bool is_absorbed(const State&) const { return false; }
  double branch_rate_bound() const { return spec_.branch_bound; }

  bool finite() const { return spec_.cap != kNoCap; }

  std::vector<State> enumerate_states() const {
    if (!finite()) throw std::logic_error("uncapped chain has no enumeration");
    std::vector<State> out;
    State x(static_cast<std::size_t>(spec_.dimension), 0);
    for (;;) {
      out.push_back(x);
      int i = spec_.dimension - 1;
      while (i >= 0 && x[static_cast<std::size_t>(i)] == spec_.cap) {
        x[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      ++x[static_cast<std::size_t>(i)];
    }
    return out;
  }

  std::vector<std::pair<State, double>> transitions(const State& x) const {
    std::vector<std::pair<State, double>> out;
    out.reserve(static_cast<std::size_t>(2 * spec_.dimension));
    for (int i = 0; i < spec_.dimension; ++i) {
      const double up = birth_at(x, i);
      if (up > 0) {
        State y = x;
        ++y[static_cast<std::size_t>(i)];
        out.emplace_back(std::move(y), up);
      }
      const double down = death_at(x, i);
      if (down > 0) {
        State y = x;
        --y[static_cast<std::size_t>(i)];
        out.emplace_back(std::move(y), down);
      }
    }
    return out;
  }

 private:
  double birth_at(const State& x, int i) const {
    if (spec_.cap != kNoCap && x[static_cast<std::size_t>(i)] >= spec_.cap) return 0.0;
    return spec_.birth(x, i);
  }

  double death_at(const State& x, int i) const {
    const double rate = spec_.death(x, i);
    if (x[static_cast<std::size_t>(i)] == 0 && rate != 0)
      throw std::logic_error("death rate must vanish on the axis x_i = 0");
    return rate;
  }

  Spec spec_;
};

}  // namespace bbmmi::models
