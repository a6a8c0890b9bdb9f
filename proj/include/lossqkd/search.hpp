// Numerical search for strong identical individual attacks at a given
// disturbance cap, with the no-count deficit either pinned to zero or free.
//
// Only the Gram matrix of the four in-signal-space probe kets matters after
// filtering, so candidates are parameterized by an upper-trapezoidal d_e x 4
// complex matrix with real diagonal (the R factor of a QR decomposition).
// Every parameter vector is mapped onto an exactly feasible attack by
// `repair`; the disturbance cap is then enforced by a root search toward the
// passive attack. Constraint violation of the raw parameters enters the
// search objective as a quadratic penalty so iterates stay near the manifold.
// Repair already makes the attack exact, so the penalty only has to stop the
// coordinates drifting in scale; a stiff weight slows the search badly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lossqkd/analysis.hpp"
#include "lossqkd/attack.hpp"
#include "lossqkd/random.hpp"

namespace lossqkd {

enum class XMode { Zero, Free };
enum class Objective { Holevo, Helstrom };

inline std::string_view to_string(XMode m) { return m == XMode::Zero ? "zero" : "free"; }
inline std::string_view to_string(Objective o) { return o == Objective::Holevo ? "holevo" : "helstrom"; }

struct SearchSpec {
  ProtocolFamily family = ProtocolFamily::bb84_4();
  double eta = 0.5;
  std::size_t d_e = 6;
  double qber_cap = 0.0;
  XMode x_mode = XMode::Free;
  Objective objective = Objective::Holevo;
  std::uint64_t seed = 0;
  std::uint64_t budget = 20000;
  double penalty_weight = 1.0;
  std::size_t restarts = 16;
  /// Extra starting point, evaluated first (restart index 0).
  std::optional<ProbeKets> initial;

  void validate() const {
    if (family.kind() == FamilyKind::B92) throw invalid_input("SearchSpec: BB84 families only");
    if (!(eta > 0.0 && eta <= 1.0)) throw invalid_input("SearchSpec: eta must lie in (0,1]");
    if (d_e < kMinProbeDim || d_e > kMaxProbeDim) throw invalid_input("SearchSpec: d_e must lie in [2,8]");
    if (!(qber_cap >= 0.0 && qber_cap <= 0.5)) throw invalid_input("SearchSpec: qber_cap must lie in [0,0.5]");
    if (budget < 1) throw invalid_input("SearchSpec: budget must be at least 1");
    if (!(penalty_weight > 0.0)) throw invalid_input("SearchSpec: penalty_weight must be positive");
    if (initial && (initial->d_e() != d_e || initial->eta() != eta))
      throw invalid_input("SearchSpec: initial attack does not match eta and d_e");
  }
};

struct SearchResult {
  bool feasible = false;
  ProbeKets best{1.0, kMinProbeDim};
  TradeoffPoint point;
  FeasibilityReport residuals;
  double objective = -std::numeric_limits<double>::infinity();
  std::uint64_t evaluations = 0;
  std::size_t restart = 0;  ///< index of the start that produced `best`
};

namespace search_detail {

/// Gauge-fixed coordinates of the four in-plane kets; column order is
/// (phi_0^0, phi_1^0, phi_0^1, phi_1^1).
struct Layout {
  std::size_t d_e;
  std::vector<std::pair<std::size_t, std::size_t>> entries;  // (row, col), row <= col

  explicit Layout(std::size_t d) : d_e(d) {
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t r = 0; r <= c && r < d_e; ++r) entries.emplace_back(r, c);
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto [r, c] : entries) n += r == c ? 1 : 2;
    return n;
  }
};

/// Columns of K as ComplexVecs.
inline std::array<ComplexVec, 4> columns(const Layout& lay, const std::vector<double>& theta) {
  std::array<ComplexVec, 4> cols{ComplexVec(lay.d_e), ComplexVec(lay.d_e), ComplexVec(lay.d_e),
                                 ComplexVec(lay.d_e)};
  std::size_t k = 0;
  for (auto [r, c] : lay.entries) {
    if (r == c) {
      cols[c][r] = theta[k++];
    } else {
      cols[c][r] = cplx{theta[k], theta[k + 1]};
      k += 2;
    }
  }
  return cols;
}

/// R factor of the column stack (modified Gram-Schmidt), in layout order.
inline std::vector<double> coordinates(const Layout& lay, const std::array<ComplexVec, 4>& cols) {
  const std::size_t d = lay.d_e;
  std::vector<ComplexVec> q;
  Matrix r(4);
  for (std::size_t c = 0; c < 4; ++c) {
    ComplexVec v = cols[c];
    for (std::size_t j = 0; j < q.size(); ++j) {
      r(j, c) = inner_product(q[j], v);
      v -= r(j, c) * q[j];
    }
    if (q.size() < d) {
      const double n = v.norm();
      r(q.size(), c) = n;
      if (n > 1e-14) {
        q.push_back(v / n);
      } else {
        // Complete the basis with the first standard vector not yet spanned.
        for (std::size_t e = 0; e < d; ++e) {
          ComplexVec w = ComplexVec::basis(d, e);
          for (const auto& qj : q) w -= inner_product(qj, w) * qj;
          if (w.norm() > 1e-6) {
            q.push_back(w / w.norm());
            break;
          }
        }
      }
    }
  }
  std::vector<double> theta;
  for (auto [row, c] : lay.entries) {
    if (row == c) {
      theta.push_back(r(row, c).real());
    } else {
      theta.push_back(r(row, c).real());
      theta.push_back(r(row, c).imag());
    }
  }
  return theta;
}

inline ComplexVec stack(const ComplexVec& top, const ComplexVec& bottom) {
  ComplexVec s(top.dim() + bottom.dim());
  for (std::size_t i = 0; i < top.dim(); ++i) s[i] = top[i];
  for (std::size_t i = 0; i < bottom.dim(); ++i) s[top.dim() + i] = bottom[i];
  return s;
}

inline ComplexVec half(const ComplexVec& v, std::size_t which, std::size_t d) {
  ComplexVec h(d);
  for (std::size_t i = 0; i < d; ++i) h[i] = v[which * d + i];
  return h;
}

/// Unit vector orthogonal to `n`, taken from the standard basis.
inline ComplexVec orthogonal_unit(const ComplexVec& n) {
  for (std::size_t e = 0; e < n.dim(); ++e) {
    ComplexVec w = ComplexVec::basis(n.dim(), e);
    w -= inner_product(n, w) * n;
    const double len = w.norm();
    if (len > 1e-6) return w / len;
  }
  throw invalid_input("orthogonal_unit: no orthogonal direction");
}

struct Repaired {
  ProbeKets kets;
  FilteredAttack filtered;
  double violation = 0.0;  ///< squared constraint violation of the raw parameters
  bool fallback = false;   ///< a degenerate input needed a substitute direction
};

/// Maps in-plane columns onto an exactly feasible attack.
inline Repaired repair(const std::array<ComplexVec, 4>& cols, double eta, bool zero_deficit) {
  const std::size_t d = cols[0].dim();
  ComplexVec w0 = stack(cols[0], cols[1]);
  ComplexVec w1 = stack(cols[2], cols[3]);

  Repaired out{ProbeKets(eta, d), FilteredAttack{}, 0.0, false};
  const cplx raw_ip = inner_product(w0, w1);
  out.violation = std::pow(w0.norm_squared() - 1.0, 2) + std::pow(w1.norm_squared() - 1.0, 2) +
                  std::pow(raw_ip.real(), 2) + (zero_deficit ? std::pow(raw_ip.imag(), 2) : 0.0);

  double n0len = w0.norm();
  if (n0len < 1e-12) {
    w0 = ComplexVec::basis(2 * d, 0);
    n0len = 1.0;
    out.fallback = true;
  }
  const ComplexVec n0 = w0 / n0len;
  const cplx ip = inner_product(n0, w1);
  w1 -= (zero_deficit ? ip : cplx{ip.real(), 0.0}) * n0;
  double n1len = w1.norm();
  if (n1len < 1e-12) {
    w1 = orthogonal_unit(n0);
    n1len = 1.0;
    out.fallback = true;
  }
  ComplexVec n1 = w1 / n1len;

  // <n0|n1> = i y; the no-count kets can only absorb |eta y| <= 1 - eta.
  double y = inner_product(n0, n1).imag();
  const double y_max = std::min(1.0, (1.0 - eta) / eta);
  if (std::abs(y) > y_max) {
    ComplexVec perp = n1 - cplx{0.0, y} * n0;
    const double plen = perp.norm();
    perp = plen > 1e-12 ? perp / plen : orthogonal_unit(n0);
    y = std::copysign(y_max, y);
    n1 = cplx{0.0, y} * n0 + std::sqrt(std::max(0.0, 1.0 - y * y)) * perp;
    y = inner_product(n0, n1).imag();
  }

  const double s = std::sqrt(eta);
  out.kets.phi(BobOutcome::Bit0, 0) = s * half(n0, 0, d);
  out.kets.phi(BobOutcome::Bit1, 0) = s * half(n0, 1, d);
  out.kets.phi(BobOutcome::Bit0, 1) = s * half(n1, 0, d);
  out.kets.phi(BobOutcome::Bit1, 1) = s * half(n1, 1, d);

  const double loss = 1.0 - eta;
  if (loss > 0.0) {
    const ComplexVec g1 = ComplexVec::basis(d, d - 2);
    const ComplexVec g2 = ComplexVec::basis(d, d - 1);
    // The no-count inner product cancels the in-plane one: -i eta y.
    const double cross = -eta * y;
    out.kets.phi(BobOutcome::NoCount, 0) = std::sqrt(loss) * g1;
    out.kets.phi(BobOutcome::NoCount, 1) =
        cplx{0.0, cross / std::sqrt(loss)} * g1 + std::sqrt(std::max(0.0, loss - cross * cross / loss)) * g2;
  }

  FilteredAttack& fa = out.filtered;
  fa.eta = eta;
  fa.hatted[0][0] = half(n0, 0, d);
  fa.hatted[1][0] = half(n0, 1, d);
  fa.hatted[0][1] = half(n1, 0, d);
  fa.hatted[1][1] = half(n1, 1, d);
  fa.deficit = cplx{0.0, -y};
  fa.x = -y;
  fa.six_state_consistent = zero_deficit;
  if (zero_deficit) {
    fa.deficit = 0.0;
    fa.x = 0.0;
  }
  return out;
}

inline double disturbance(const FilteredAttack& fa, const std::vector<Basis>& bases) {
  double d = 0.0;
  for (Basis b : bases) d += qber(fa, b);
  return d / static_cast<double>(bases.size());
}

/// Objective from the 4x4 Gram matrix of Eve's conditional kets. Her states
/// have rank at most two, so their spectra live in that Gram matrix whatever
/// d_e is. Agrees with tradeoff_point to rounding.
inline double gram_objective(const FilteredAttack& fa, const std::vector<Basis>& bases, Objective obj) {
  double total = 0.0;
  for (Basis basis : bases) {
    const BasisPair bp = standard_basis(basis);
    std::array<ComplexVec, 4> k{fa.image(0, bp.bit0.a(), bp.bit0.b()), fa.image(1, bp.bit0.a(), bp.bit0.b()),
                                fa.image(0, bp.bit1.a(), bp.bit1.b()), fa.image(1, bp.bit1.a(), bp.bit1.b())};
    Matrix g(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i; j < 4; ++j) {
        g(i, j) = inner_product(k[i], k[j]);
        g(j, i) = std::conj(g(i, j));
      }
    if (obj == Objective::Holevo) {
      auto entropy = [](const std::vector<double>& ev, double scale) {
        double h = 0.0;
        for (double l : ev) h += entropy_term(std::max(scale * l, 0.0));
        return h;
      };
      Matrix g0(2), g1(2);
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          g0(i, j) = g(i, j);
          g1(i, j) = g(i + 2, j + 2);
        }
      const double chi = entropy(eigvalsh(g), 0.5) - 0.5 * entropy(eigvalsh(g0), 1.0) -
                         0.5 * entropy(eigvalsh(g1), 1.0);
      total += std::max(chi, 0.0);
    } else {
      // Nonzero spectrum of (rho0 - rho1)/2 is that of G^1/2 S G^1/2.
      const EigenSystem es = eigh(g);
      Matrix root(4);
      for (std::size_t e = 0; e < 4; ++e) {
        const double w = std::sqrt(std::max(es.values[e], 0.0));
        root = root + w * Matrix::outer(es.vectors[e], es.vectors[e]);
      }
      Matrix m = root * Matrix::diagonal({0.5, 0.5, -0.5, -0.5}) * root;
      double tn = 0.0;
      for (double l : eigvalsh(m)) tn += std::abs(l);
      total += std::clamp(0.5 + 0.5 * tn, 0.5, 1.0);
    }
  }
  return total / static_cast<double>(bases.size());
}

struct Candidate {
  std::vector<double> theta;  ///< search coordinates (raw, possibly off-manifold)
  double step = 0.25;  ///< initial inverse-Hessian scale
  double merit = -std::numeric_limits<double>::infinity();  ///< penalized objective at theta
  double penalty_weight = 1.0;
  bool converged = false;
  std::vector<double> gradient;     ///< of the negated merit at theta
  std::vector<double> inv_hessian;  ///< row-major quasi-Newton estimate
  double merit_at_reset = -std::numeric_limits<double>::infinity();
  // best feasible point this candidate has produced
  std::optional<ProbeKets> best;
  double best_objective = -std::numeric_limits<double>::infinity();
};

class Evaluator {
public:
  explicit Evaluator(const SearchSpec& spec)
      : spec_(spec), layout_(spec.d_e), bases_(sifted_bases(spec.family)),
        zero_deficit_(spec.x_mode == XMode::Zero || spec.family.kind() == FamilyKind::BB84_6) {
    // In-plane columns of the passive attack: phi_0^0 = phi_1^1 = e1.
    std::array<ComplexVec, 4> cols{ComplexVec(spec.d_e), ComplexVec(spec.d_e), ComplexVec(spec.d_e),
                                   ComplexVec(spec.d_e)};
    cols[0][0] = 1.0;
    cols[3][0] = 1.0;
    passive_theta_ = coordinates(layout_, cols);
  }

  const Layout& layout() const { return layout_; }
  std::uint64_t evaluations() const { return evaluations_; }
  bool exhausted() const { return evaluations_ >= spec_.budget; }

  /// Evaluates theta, updating the candidate's best feasible point, and
  /// returns the penalized merit. Parameters whose repaired attack exceeds
  /// the cap are scored at the point where the segment toward the passive
  /// attack crosses it, so the merit is flat outward and smooth along the cap.
  double evaluate(const std::vector<double>& theta, Candidate& cand) {
    ++evaluations_;
    Repaired rep = repair(columns(layout_, theta), spec_.eta, zero_deficit_);
    if (rep.fallback) cand.penalty_weight *= 2.0;
    const double d = disturbance(rep.filtered, bases_);
    last_scaled_ = false;
    if (d > spec_.qber_cap) {
      const double v = rep.violation;
      rep = pull_back(theta, d);
      rep.violation = v;
      last_scaled_ = true;
    }
    const double obj = gram_objective(rep.filtered, bases_, spec_.objective);
    if (obj > cand.best_objective) {
      cand.best_objective = obj;
      cand.best = std::move(rep.kets);
    }
    return obj - cand.penalty_weight * rep.violation;
  }

  /// Coordinates actually scored by the last evaluate call.
  std::vector<double> last_scored(const std::vector<double>& theta) const {
    if (!last_scaled_) return theta;
    std::vector<double> mix(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) mix[k] = (1.0 - last_t_) * theta[k] + last_t_ * passive_theta_[k];
    return mix;
  }

  /// Scores a user-supplied starting attack as-is when it is already feasible.
  void seed_candidate(const ProbeKets& pk, Candidate& cand) {
    std::array<ComplexVec, 4> cols;
    const double s = 1.0 / std::sqrt(spec_.eta);
    cols[0] = s * pk.phi(BobOutcome::Bit0, 0);
    cols[1] = s * pk.phi(BobOutcome::Bit1, 0);
    cols[2] = s * pk.phi(BobOutcome::Bit0, 1);
    cols[3] = s * pk.phi(BobOutcome::Bit1, 1);
    cand.theta = coordinates(layout_, cols);

    const auto report = check_feasibility(pk, spec_.family);
    bool as_is = report.ok(1e-12);
    if (as_is) {
      try {
        const FilteredAttack fa = filter_no_count(pk, 1e-12);
        if (zero_deficit_ && std::abs(fa.x) > 1e-12) as_is = false;
        if (as_is && disturbance(fa, bases_) <= spec_.qber_cap) {
          ++evaluations_;
          cand.best_objective = gram_objective(fa, bases_, spec_.objective);
          cand.best = pk;
          cand.merit = cand.best_objective;
          return;
        }
      } catch (const invalid_input&) {
      }
    }
    cand.merit = evaluate(cand.theta, cand);
  }

private:
  /// Illinois root search for the cap crossing on the segment
  /// theta -> passive (disturbance d_theta at t = 0, zero at t = 1).
  Repaired pull_back(const std::vector<double>& theta, double d_theta) {
    std::vector<double> mix(theta.size());
    auto at = [&](double t) {
      for (std::size_t k = 0; k < theta.size(); ++k) mix[k] = (1.0 - t) * theta[k] + t * passive_theta_[k];
      return repair(columns(layout_, mix), spec_.eta, zero_deficit_);
    };
    double a = 0.0, fa = d_theta - spec_.qber_cap;
    double b = 1.0;
    Repaired feasible = at(b);
    last_t_ = 1.0;
    double fb = disturbance(feasible.filtered, bases_) - spec_.qber_cap;
    if (fb > 0.0) return feasible;  // cannot happen: the passive attack is undisturbed
    int side = 0;
    for (int it = 0; it < 100 && fb < -1e-13 && b - a > 1e-15; ++it) {
      double t = b - fb * (b - a) / (fb - fa);
      if (!(t > a && t < b)) t = 0.5 * (a + b);
      Repaired r = at(t);
      const double ft = disturbance(r.filtered, bases_) - spec_.qber_cap;
      if (ft <= 0.0) {
        b = t;
        fb = ft;
        last_t_ = t;
        feasible = std::move(r);
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = t;
        fa = ft;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
    return feasible;
  }

  const SearchSpec& spec_;
  Layout layout_;
  std::vector<Basis> bases_;
  bool zero_deficit_;
  std::vector<double> passive_theta_;
  std::uint64_t evaluations_ = 0;
  bool last_scaled_ = false;
  double last_t_ = 0.0;
};

inline constexpr double kMinStep = 1e-9;
inline constexpr double kDiffStep = 1e-6;

/// Central-difference gradient of the negated merit. False if the budget ran
/// out before it was complete.
inline bool merit_gradient(Evaluator& ev, Candidate& cand, const std::vector<double>& x, std::vector<double>& g) {
  std::vector<double> probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (ev.exhausted()) return false;
    probe[k] = x[k] + kDiffStep;
    const double up = ev.evaluate(probe, cand);
    if (ev.exhausted()) return false;
    probe[k] = x[k] - kDiffStep;
    const double down = ev.evaluate(probe, cand);
    probe[k] = x[k];
    g[k] = -(up - down) / (2.0 * kDiffStep);
  }
  return true;
}

/// Quasi-Newton descent on the negated merit using finite-difference
/// gradients and an Armijo backtracking line search. Resumable: the inverse
/// Hessian estimate lives in the candidate. Runs until `quota` evaluations
/// are spent, an accepted step is shorter than kMinStep, or the evaluator's
/// budget ends.
inline void refine(Evaluator& ev, Candidate& cand, std::uint64_t quota) {
  const std::uint64_t stop = ev.evaluations() + quota;
  const std::size_t n = cand.theta.size();
  auto reset_hessian = [&] {
    cand.inv_hessian.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) cand.inv_hessian[i * n + i] = cand.step;
  };
  if (cand.gradient.empty()) {
    cand.gradient.assign(n, 0.0);
    if (!merit_gradient(ev, cand, cand.theta, cand.gradient)) {
      cand.gradient.clear();
      return;
    }
    reset_hessian();
  }
  std::vector<double>& h = cand.inv_hessian;
  std::vector<double>& g = cand.gradient;
  // A stall right after a quasi-Newton restart is final; otherwise restart
  // from the current point, since finite-difference noise can end a run early.
  auto stalled = [&] {
    if (cand.merit - cand.merit_at_reset > 1e-12) {
      cand.merit_at_reset = cand.merit;
      reset_hessian();
      return false;
    }
    cand.converged = true;
    return true;
  };
  std::vector<double> dir(n), next(n), g_next(n), s(n), y(n), hy(n);
  bool fresh = false;
  while (!cand.converged && ev.evaluations() < stop && !ev.exhausted()) {
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v -= h[i * n + j] * g[j];
      dir[i] = v;
      slope += v * g[i];
    }
    if (!(slope < 0.0)) {
      if (fresh && stalled()) break;
      if (fresh) continue;
      reset_hessian();
      fresh = true;
      continue;
    }
    const double f0 = -cand.merit;
    double alpha = 1.0;
    double f_next = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40 && !ev.exhausted(); ++ls) {
      for (std::size_t i = 0; i < n; ++i) next[i] = cand.theta[i] + alpha * dir[i];
      f_next = -ev.evaluate(next, cand);
      if (f_next <= f0 + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (ev.exhausted()) return;
      if (fresh && stalled()) break;
      if (fresh) continue;
      reset_hessian();
      fresh = true;
      continue;
    }
    double step_len = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = alpha * dir[i];
      step_len = std::max(step_len, std::abs(s[i]));
    }
    if (!merit_gradient(ev, cand, next, g_next)) {
      cand.theta = next;
      cand.merit = -f_next;
      cand.gradient.clear();
      return;
    }
    double sy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = g_next[i] - g[i];
      sy += s[i] * y[i];
      yy += y[i] * y[i];
    }
    if (sy > 1e-12 * std::sqrt(yy) * step_len) {
      if (fresh) {
        // Rescale the identity guess to the observed curvature first.
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) h[i * n + j] = i == j ? sy / yy : 0.0;
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += h[i * n + j] * y[j];
        hy[i] = v;
        yhy += v * y[i];
      }
      const double rho = 1.0 / sy;
      const double coef = (1.0 + rho * yhy) * rho;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
    }
    fresh = false;
    cand.theta = next;
    cand.merit = -f_next;
    g = g_next;
    if (step_len < kMinStep) {
      if (stalled()) break;
      fresh = true;
    }
  }
}

}  // namespace search_detail

/// Maximizes the chosen objective over feasible attacks with d_avg <= qber_cap.
/// Local refinement from several starts under successive halving; only local
/// optimality is claimed.
inline SearchResult optimize_attack(const SearchSpec& spec) {
  using namespace search_detail;
  spec.validate();
  Evaluator ev(spec);
  const std::size_t dim = ev.layout().size();

  std::vector<Candidate> cands;
  auto fresh = [&] {
    Candidate c;
    c.penalty_weight = spec.penalty_weight;
    return c;
  };
  if (spec.initial) {
    Candidate c = fresh();
    ev.seed_candidate(*spec.initial, c);
    cands.push_back(std::move(c));
  }
  for (std::size_t r = 0; r < spec.restarts && !ev.exhausted(); ++r) {
    Candidate c = fresh();
    RandomStream rng(spec.seed, r);
    c.theta.resize(dim);
    for (double& t : c.theta) t = 0.5 * rng.normal();
    ev.evaluate(c.theta, c);
    // Start from the point actually scored; a raw start far beyond a small
    // cap would leave the search badly scaled.
    c.theta = ev.last_scored(c.theta);
    c.merit = ev.evaluate(c.theta, c);
    cands.push_back(std::move(c));
  }

  // Successive halving: each round splits an equal share of the budget over
  // the survivors, then keeps the better half.
  std::vector<std::size_t> alive(cands.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  std::size_t rounds = 1;
  for (std::size_t m = alive.size(); m > 1; m = (m + 1) / 2) ++rounds;
  const std::uint64_t remaining = spec.budget > ev.evaluations() ? spec.budget - ev.evaluations() : 0;
  const std::uint64_t per_round = std::max<std::uint64_t>(1, remaining / rounds);
  while (!ev.exhausted() && !alive.empty()) {
    const std::uint64_t share = std::max<std::uint64_t>(1, per_round / alive.size());
    for (std::size_t idx : alive) refine(ev, cands[idx], share);
    if (alive.size() == 1) {
      if (cands[alive[0]].converged) break;
      continue;
    }
    std::stable_sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
      return cands[a].best_objective > cands[b].best_objective;
    });
    alive.resize((alive.size() + 1) / 2);
    std::sort(alive.begin(), alive.end());
    bool all_done = true;
    for (std::size_t idx : alive) all_done = all_done && cands[idx].converged;
    if (all_done) break;
  }

  SearchResult res;
  res.evaluations = ev.evaluations();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].best && cands[i].best_objective > res.objective) {
      res.objective = cands[i].best_objective;
      res.best = *cands[i].best;
      res.restart = i;
    }
  }
  if (!std::isfinite(res.objective)) return res;
  res.residuals = check_feasibility(res.best, spec.family);
  if (!res.residuals.ok(kFeasibilityTol)) return res;
  res.point = tradeoff_point(filter_no_count(res.best), spec.family);
  res.objective = spec.objective == Objective::Holevo ? res.point.i_holevo : res.point.p_guess;
  res.feasible = res.residuals.ok(kFeasibilityTol) && res.point.d_avg <= spec.qber_cap + kFeasibilityTol &&
                 (spec.x_mode == XMode::Free || std::abs(res.point.x) <= kFeasibilityTol);
  return res;
}

struct SweepRow {
  double qber_cap = 0.0;
  SearchResult result;
};

inline constexpr const char* kSweepCsvHeader = "qber_cap,i_holevo,p_guess,x_best,feasible,evaluations";

/// One search per cap (ascending), each warm-started from the previous best.
inline std::vector<SweepRow> sweep_tradeoff(const SearchSpec& spec, const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw invalid_input("sweep_tradeoff: grid must be ascending");
  std::vector<SweepRow> rows;
  SearchSpec s = spec;
  for (double cap : grid) {
    s.qber_cap = cap;
    SweepRow row{cap, {}};
    try {
      row.result = optimize_attack(s);
    } catch (const invalid_input&) {
      row.result = SearchResult{};
    }
    if (row.result.feasible) s.initial = row.result.best;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lossqkd
