#include "bellow/shape_match.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <sstream>

#include "bellow/error.hpp"
#include "bellow/gaussian_process.hpp"
#include "bellow/rng.hpp"

namespace bellow {

namespace {

constexpr double kRelSlack = 1e-9;
// Offset that keeps l strictly above 4t so every design is a valid module.
constexpr double kStrictMargin = 1e-6;
constexpr double kLogFloor = 1e-6;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool leq(double a, double b) { return a <= b + kRelSlack * std::max({1.0, std::abs(a), std::abs(b)}); }

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::vector<std::size_t> arc_indices(const std::vector<ArcSegment>& segs) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].kind == SegmentKind::arc) out.push_back(i);
  }
  return out;
}

// Latin hypercube in the unit box: one point per stratum on each axis.
std::vector<Eigen::VectorXd> latin_hypercube(std::size_t n, Eigen::Index dim, Rng& rng) {
  std::vector<Eigen::VectorXd> pts(n, Eigen::VectorXd(dim));
  for (Eigen::Index d = 0; d < dim; ++d) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i][d] = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
    }
  }
  return pts;
}

double min_distance(const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, (p - q).norm());
  return best;
}

// Greedy maximin subset of `pool`, starting from its first point.
std::vector<Eigen::VectorXd> maximin_subset(const std::vector<Eigen::VectorXd>& pool, std::size_t n) {
  std::vector<Eigen::VectorXd> out;
  if (pool.empty()) return out;
  out.push_back(pool.front());
  while (out.size() < n && out.size() < pool.size()) {
    std::size_t arg = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double d = min_distance(pool[i], out);
      if (d > far) {
        far = d;
        arg = i;
      }
    }
    if (far <= 0.0) break;
    out.push_back(pool[arg]);
  }
  return out;
}

Eigen::VectorXd clamp_unit(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], 0.0, 1.0);
  return v;
}

// Candidate set for acquisition: uniform points plus Gaussian perturbations of
// the best observations at two scales.
std::vector<Eigen::VectorXd> candidates(Eigen::Index dim, std::size_t uniform, const std::vector<Eigen::VectorXd>& x,
                                        const std::vector<double>& y, Rng& rng) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(uniform + 64);
  for (std::size_t i = 0; i < uniform; ++i) {
    Eigen::VectorXd p(dim);
    for (Eigen::Index d = 0; d < dim; ++d) p[d] = rng.uniform();
    out.push_back(std::move(p));
  }
  std::vector<std::size_t> order(y.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  for (std::size_t r = 0; r < std::min<std::size_t>(3, order.size()); ++r) {
    for (double sigma : {0.02, 0.1}) {
      for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd p = x[order[r]];
        for (Eigen::Index d = 0; d < dim; ++d) p[d] += sigma * rng.normal();
        out.push_back(clamp_unit(std::move(p)));
      }
    }
  }
  return out;
}

// Highest-EI candidate among those accepted by `feasible`, skipping points
// already observed. Returns nullopt when nothing feasible turns up.
template <typename Feasible>
std::optional<Eigen::VectorXd> propose(const GaussianProcess& gp, const std::vector<Eigen::VectorXd>& pool,
                                       const std::vector<Eigen::VectorXd>& seen, double best, Feasible&& feasible) {
  std::optional<Eigen::VectorXd> arg;
  double best_ei = -1.0;
  for (const auto& c : pool) {
    if (!feasible(c)) continue;
    if (min_distance(c, seen) < 1e-9) continue;
    double m = 0.0, v = 0.0;
    gp.predict(c, m, v);
    const double ei = expected_improvement(m, v, best);
    if (ei > best_ei) {
      best_ei = ei;
      arg = c;
    }
  }
  return arg;
}

}  // namespace

double MatchProblem::effective_kappa_max() const {
  if (kappa_max) return *kappa_max;
  double k = 0.0;
  for (const auto& s : segments) {
    if (s.kind == SegmentKind::arc) k = std::max(k, s.kappa);
  }
  return k;
}

void validate_problem(const MatchProblem& p) {
  std::vector<std::string> v;
  if (p.segments.empty()) v.push_back("segments non-empty");
  if (arc_indices(p.segments).empty() && !p.segments.empty()) v.push_back("at least one arc segment");
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    const auto& s = p.segments[i];
    if (!(s.L > 0.0) || !std::isfinite(s.L)) v.push_back("segment " + std::to_string(i) + ": L > 0");
    if (s.kind == SegmentKind::arc && (!(s.kappa > 0.0) || !std::isfinite(s.kappa))) {
      v.push_back("segment " + std::to_string(i) + ": kappa > 0");
    }
    if (!std::isfinite(s.dphi)) v.push_back("segment " + std::to_string(i) + ": finite dphi");
  }
  if (!(p.p_max >= 0.0) || !std::isfinite(p.p_max)) v.push_back("P_max >= 0");
  if (p.kappa_max && !(*p.kappa_max > 0.0)) v.push_back("kappa_max > 0");
  if (!(p.r_ou_min >= 0.0) || !(p.r_ou_max > p.r_ou_min) || !std::isfinite(p.r_ou_max)) {
    v.push_back("0 <= r_ou_min < r_ou_max");
  }
  if (p.budget.upper_iters < 1) v.push_back("upper budget >= 1");
  if (p.budget.lower_iters < 1) v.push_back("lower budget >= 1");
  if (!(p.target_cost > 0.0)) v.push_back("target_cost > 0");
  if (!v.empty()) throw ValidationError("invalid match problem", v);
}

int module_count(double L, double l) {
  return std::max(1, static_cast<int>(std::lround(L / l)));
}

double segment_cost_unchecked(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                              const SurrogateModel& surrogate) {
  const int n = module_count(seg.L, y.l);
  const double theta = surrogate.theta(ModuleDesign{x.r_in, x.t, y.R, y.l}, x.P);
  const double length = (seg.L - n * y.l) / seg.L;
  const double curvature = (seg.kappa - theta / y.l) / seg.kappa;
  return std::sqrt(length * length + curvature * curvature);
}

double segment_cost(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                    const SurrogateModel& surrogate) {
  auto v = feasibility_violations(x, y, seg, std::numeric_limits<double>::infinity(), 0.0);
  if (!v.empty()) throw ValidationError("infeasible design point", v);
  return segment_cost_unchecked(x, y, seg, surrogate);
}

std::vector<std::string> feasibility_violations(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                                                double p_max, double kappa_max) {
  std::vector<std::string> v;
  const double inv_kmax = kappa_max > 0.0 ? 1.0 / kappa_max : std::numeric_limits<double>::infinity();
  if (!(x.P >= 0.0) || !leq(x.P, p_max)) v.push_back("0 <= P <= P_max (P=" + fmt(x.P) + ")");
  if (!(x.r_in > 0.0) || !leq(x.r_in, inv_kmax)) v.push_back("0 < r_in <= 1/kappa_max (r_in=" + fmt(x.r_in) + ")");
  if (!leq(y.R / 4.0, x.t) || !leq(x.t, x.r_in / 2.0)) {
    v.push_back("R/4 <= t <= r_in/2 (t=" + fmt(x.t) + ", R=" + fmt(y.R) + ")");
  }
  const double R_hi = std::min(1.0 / (2.0 * seg.kappa) + x.r_in / 2.0, 2.0 * x.r_in);
  if (!leq(x.r_in + x.t, y.R) || !leq(y.R, R_hi)) {
    v.push_back("r_in + t <= R <= min(1/(2 kappa) + r_in/2, 2 r_in) (R=" + fmt(y.R) + ")");
  }
  if (!leq(4.0 * x.t, y.l) || !(y.l < std::min(seg.L, 4.0 * (y.R - x.r_in)))) {
    v.push_back("4t <= l < min(L, 4(R - r_in)) (l=" + fmt(y.l) + ")");
  }
  return v;
}

bool LowerBox::empty() const { return !(R_hi >= R_lo) || !(l_hi(R_hi) > l_lo); }

double LowerBox::l_hi(double R) const { return std::min(L, 4.0 * (R - r_in)); }

SegmentParams LowerBox::at(double u, double v) const {
  const double R = R_lo + std::clamp(u, 0.0, 1.0) * (R_hi - R_lo);
  const double span = std::max(l_hi(R) - l_lo, 0.0);
  return {R, l_lo + std::clamp(v, 0.0, 1.0 - kStrictMargin) * span};
}

std::optional<LowerBox> lower_box(const SharedParams& x, const ArcSegment& seg, double r_ou_min, double r_ou_max) {
  LowerBox b;
  b.r_in = x.r_in;
  b.L = seg.L;
  b.l_lo = 4.0 * x.t * (1.0 + kStrictMargin);
  // l_hi(R) must exceed l_lo, which pushes R slightly above r_in + t.
  b.R_lo = std::max({x.r_in + x.t, 0.5 * (r_ou_min + x.r_in), x.r_in + b.l_lo / 4.0 * (1.0 + kStrictMargin)});
  b.R_hi = std::min({4.0 * x.t, 2.0 * x.r_in, 1.0 / (2.0 * seg.kappa) + x.r_in / 2.0, 0.5 * (r_ou_max + x.r_in)});
  if (!(x.r_in > 0.0) || !(x.t > 0.0) || !(x.t <= x.r_in / 2.0) || b.empty()) return std::nullopt;
  return b;
}

namespace {

// Moves l onto L / n when that stays inside the box, which zeroes the length
// residual. Returns the unit coordinates of the snapped point.
Eigen::Vector2d snap(const LowerBox& box, const Eigen::Vector2d& uv) {
  const SegmentParams y = box.at(uv[0], uv[1]);
  const double hi = box.l_hi(y.R);
  const int n = module_count(box.L, y.l);
  for (int m : {n, n + 1}) {
    const double l = box.L / m;
    if (l >= box.l_lo && l < hi - kStrictMargin * (hi - box.l_lo)) {
      return {uv[0], (l - box.l_lo) / (hi - box.l_lo)};
    }
  }
  return uv;
}

}  // namespace

LowerResult optimize_lower(const SharedParams& x, const ArcSegment& seg, const SurrogateModel& surrogate, int budget,
                           std::uint64_t seed, double r_ou_min, double r_ou_max) {
  LowerResult res;
  const auto box = lower_box(x, seg, r_ou_min, r_ou_max);
  if (!box) return res;
  res.feasible = true;
  Rng rng(seed);

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> costs, obs;
  auto evaluate = [&](const Eigen::Vector2d& uv) {
    const Eigen::Vector2d s = snap(*box, uv);
    const SegmentParams y = box->at(s[0], s[1]);
    const double c = segment_cost_unchecked(x, y, seg, surrogate);
    xs.push_back(s);
    costs.push_back(c);
    obs.push_back(std::log(c + kLogFloor));
    ++res.evaluations;
    if (res.evaluations == 1 || c < res.cost) {
      res.cost = c;
      res.y = y;
    }
  };

  const bool degenerate = box->R_hi - box->R_lo < 1e-12 && box->l_hi(box->R_hi) - box->l_lo < 1e-12;
  if (degenerate) {
    evaluate(Eigen::Vector2d(0.0, 0.0));
    return res;
  }
  const auto initial = latin_hypercube(static_cast<std::size_t>(std::min(budget, 5)), 2, rng);
  for (const auto& p : initial) evaluate(p);
  while (res.evaluations < budget) {
    GaussianProcess gp;
    gp.fit(xs, obs);
    const double best = *std::min_element(obs.begin(), obs.end());
    const auto pool = candidates(2, 256, xs, obs, rng);
    auto next = propose(gp, pool, xs, best, [](const Eigen::VectorXd&) { return true; });
    if (!next) next = Eigen::Vector2d(rng.uniform(), rng.uniform());
    evaluate(*next);
  }
  return res;
}

namespace {

struct UpperBox {
  double r_lo = 0.0, r_hi = 0.0;
  double p_max = 0.0;

  SharedParams at(const Eigen::VectorXd& u) const {
    SharedParams x;
    x.r_in = r_lo + u[0] * (r_hi - r_lo);
    // t spans [r_in/3, r_in/2]; below r_in/3 no R satisfies both R <= 4t and
    // R > r_in + t.
    x.t = x.r_in * (1.0 / 3.0 + u[1] / 6.0);
    x.P = u[2] * p_max;
    return x;
  }
};

using CacheKey = std::array<std::uint64_t, 5>;

}  // namespace

MatchResult optimize(const MatchProblem& problem, const SurrogateModel& surrogate, const MatchProgress& progress) {
  validate_problem(problem);
  const auto arcs = arc_indices(problem.segments);
  const double kmax = problem.effective_kappa_max();

  MatchResult result;
  result.seed = problem.seed;
  result.budget = problem.budget;
  result.kappa_max = kmax;

  UpperBox ub;
  ub.r_lo = problem.r_ou_min / 3.0;
  ub.r_hi = std::min(1.0 / kmax, 0.6 * problem.r_ou_max);
  ub.p_max = problem.p_max;

  std::map<CacheKey, LowerResult> cache;
  auto lower_seed = [&](const SharedParams& x, const ArcSegment& s) {
    std::uint64_t h = problem.seed;
    for (double v : {x.r_in, x.t, x.P, s.L, s.kappa}) h = mix_seed(h, bits(v));
    return h;
  };
  auto key = [](const SharedParams& x, const ArcSegment& s) {
    return CacheKey{bits(x.r_in), bits(x.t), bits(x.P), bits(s.L), bits(s.kappa)};
  };
  auto x_feasible = [&](const SharedParams& x) {
    if (!(x.r_in > 0.0)) return false;
    for (auto j : arcs) {
      if (!lower_box(x, problem.segments[j], problem.r_ou_min, problem.r_ou_max)) return false;
    }
    return true;
  };
  // Runs (or recalls) the lower level for every arc; returns per-arc results.
  auto evaluate_x = [&](const SharedParams& x) {
    std::vector<LowerResult> out(arcs.size());
    std::vector<std::future<LowerResult>> jobs(arcs.size());
    std::vector<char> pending(arcs.size(), 0);
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      const auto& s = problem.segments[arcs[a]];
      if (auto it = cache.find(key(x, s)); it != cache.end()) {
        out[a] = it->second;
        continue;
      }
      pending[a] = 1;
      auto run = [&, s, x]() {
        return optimize_lower(x, s, surrogate, problem.budget.lower_iters, lower_seed(x, s), problem.r_ou_min,
                              problem.r_ou_max);
      };
      jobs[a] = std::async(problem.parallel && arcs.size() > 1 ? std::launch::async : std::launch::deferred, run);
    }
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      if (!pending[a]) continue;
      out[a] = jobs[a].get();
      // Identical segments share a key; the first run wins either way.
      cache.emplace(key(x, problem.segments[arcs[a]]), out[a]);
      result.lower_evaluations += out[a].evaluations;
    }
    return out;
  };

  Rng rng(mix_seed(problem.seed, 0x7570706572));
  std::vector<Eigen::VectorXd> pool;
  if (ub.r_hi > ub.r_lo && ub.r_hi > 0.0) {
    for (int attempt = 0; attempt < 20 && pool.size() < 64; ++attempt) {
      for (const auto& p : latin_hypercube(256, 3, rng)) {
        if (x_feasible(ub.at(p))) pool.push_back(p);
      }
    }
  }

  if (pool.empty()) {
    // Best attempt: centre of the search box, each segment at the centre of
    // its nominal ranges.
    result.feasible = false;
    result.violations.push_back("no shared parameters (r_in, t, P) admit a feasible design for every segment");
    result.x = ub.at(Eigen::Vector3d(0.5, 0.5, 0.5));
    if (!(result.x.r_in > 0.0)) result.x = {problem.r_ou_min > 0 ? problem.r_ou_min / 2.0 : 1.0, 0.0, 0.0};
    result.x.t = result.x.r_in * 5.0 / 12.0;
    double total = 0.0;
    for (const auto& s : problem.segments) {
      SegmentMatch m;
      m.segment = s;
      m.R = result.x.r_in + 2.0 * result.x.t;
      m.l = 4.0 * result.x.t * 1.5;
      m.n = module_count(s.L, m.l);
      m.length_error = s.L - m.n * m.l;
      m.rigid = s.kind == SegmentKind::line;
      if (!m.rigid) {
        m.theta = surrogate.theta(ModuleDesign{result.x.r_in, result.x.t, m.R, m.l}, result.x.P);
        m.cost = segment_cost_unchecked(result.x, {m.R, m.l}, s, surrogate);
        total += m.cost;
      }
      result.segments.push_back(m);
    }
    result.mean_cost = total / static_cast<double>(arcs.size());
    return result;
  }

  const int budget = problem.budget.upper_iters;
  const std::size_t n_init = static_cast<std::size_t>(std::clamp(budget / 6, std::min(budget, 5), 10));
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> obs, means;
  std::vector<std::vector<LowerResult>> lowers;
  double best_mean = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;

  auto record = [&](const Eigen::VectorXd& u) {
    const SharedParams x = ub.at(u);
    auto lr = evaluate_x(x);
    double total = 0.0;
    bool all_below = true;
    for (const auto& r : lr) {
      total += r.cost;
      all_below = all_below && r.cost < problem.target_cost;
    }
    const double mean = total / static_cast<double>(lr.size());
    xs.push_back(u);
    obs.push_back(std::log(mean + kLogFloor));
    means.push_back(mean);
    lowers.push_back(std::move(lr));
    if (mean < best_mean) {
      best_mean = mean;
      best_idx = xs.size() - 1;
    }
    result.best_cost_history.push_back(best_mean);
    ++result.upper_iterations;
    if (progress) progress(result.upper_iterations, budget, best_mean);
    return mean < problem.target_cost && all_below;
  };

  bool done = false;
  for (const auto& u : maximin_subset(pool, n_init)) {
    if (done || result.upper_iterations >= budget) break;
    done = record(u);
  }
  while (!done && result.upper_iterations < budget) {
    GaussianProcess gp;
    gp.fit(xs, obs);
    const double best = *std::min_element(obs.begin(), obs.end());
    const auto cands = candidates(3, 1024, xs, obs, rng);
    auto next = propose(gp, cands, xs, best, [&](const Eigen::VectorXd& c) { return x_feasible(ub.at(c)); });
    if (!next) {
      // Fall back to an unvisited feasible point from the initial pool.
      for (const auto& p : pool) {
        if (min_distance(p, xs) > 1e-9) {
          next = p;
          break;
        }
      }
    }
    if (!next) break;
    done = record(*next);
  }

  result.x = ub.at(xs[best_idx]);
  const auto& best_lower = lowers[best_idx];
  result.mean_cost = means[best_idx];
  // Rigid modules on straight segments borrow the first arc's geometry.
  const SegmentParams reference = best_lower.front().y;
  bool extrapolated = false;
  std::size_t a = 0;
  for (const auto& s : problem.segments) {
    SegmentMatch m;
    m.segment = s;
    if (s.kind == SegmentKind::arc) {
      const auto& lr = best_lower[a++];
      m.R = lr.y.R;
      m.l = lr.y.l;
      m.n = module_count(s.L, m.l);
      const auto pred = surrogate.predict(ModuleDesign{result.x.r_in, result.x.t, m.R, m.l}, result.x.P);
      m.theta = pred.theta;
      extrapolated = extrapolated || pred.extrapolation_warning;
      m.cost = lr.cost;
      m.length_error = s.L - m.n * m.l;
      for (auto& v : feasibility_violations(result.x, lr.y, s, problem.p_max, kmax)) {
        result.violations.push_back("segment " + std::to_string(result.segments.size()) + ": " + v);
      }
    } else {
      const auto plan = plan_straight(s, result.x, reference);
      m.R = plan.module.R;
      m.l = plan.module.l;
      m.n = plan.count;
      m.rigid = true;
      m.length_error = plan.length_error;
    }
    result.segments.push_back(m);
  }
  result.extrapolated = extrapolated;
  if (!(problem.p_max > 0.0)) result.violations.push_back("P_max > 0");
  result.feasible = result.violations.empty();
  return result;
}

StraightPlan plan_straight(const ArcSegment& seg, const SharedParams& x, const SegmentParams& reference) {
  StraightPlan plan;
  plan.module = ModuleDesign{x.r_in, x.t, reference.R, reference.l, true};
  const long n = std::lround(seg.L / reference.l);
  if (n >= 1) {
    plan.count = static_cast<int>(n);
  } else {
    // Shorter than half a module: one module, as short as the design allows.
    plan.count = 1;
    plan.module.l = std::min(reference.l, std::max(seg.L, 4.0 * x.t * (1.0 + kStrictMargin)));
  }
  plan.length_error = seg.L - plan.count * plan.module.l;
  return plan;
}

ActuatorSpec assemble(const MatchResult& result, const Material& material) {
  if (!result.feasible) throw ValidationError("cannot assemble an infeasible result", result.violations);
  std::vector<ModuleDesign> modules;
  std::vector<double> rotations;
  for (std::size_t j = 0; j < result.segments.size(); ++j) {
    const auto& s = result.segments[j];
    for (int k = 0; k < s.n; ++k) {
      if (!modules.empty()) rotations.push_back(k == 0 ? s.segment.dphi : 0.0);
      modules.push_back(ModuleDesign{result.x.r_in, result.x.t, s.R, s.l, s.rigid});
    }
  }
  return build_actuator(std::move(modules), std::move(rotations), result.x.P, material);
}

}  // namespace bellow
