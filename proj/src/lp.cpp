#include "decnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dense_lu.hpp"

namespace decnet {

const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::Breakdown: return "breakdown";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Eta {
  int r;
  std::vector<double> alpha;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opts) : opts_(opts) {
    n_ = lp.n;
    m_ = static_cast<int>(lp.rows.size());
    ncols_ = n_ + 2 * m_;

    // Equilibration by powers of two keeps coefficients exact while evening
    // out magnitudes: voltage products, yearly energies and binaries differ
    // by seven orders, which would otherwise wreck basis conditioning.
    scale_.assign(m_, 1.0);
    cscale_.assign(n_, 1.0);
    auto nearest_pow2_inverse = [](double v) {
      return std::exp2(-std::round(std::log2(v)));
    };
    for (int round = 0; round < 3; ++round) {
      std::vector<double> rmax(m_, 0.0), cmax(n_, 0.0);
      for (int i = 0; i < m_; ++i)
        for (auto [j, c] : lp.rows[i].coef)
          rmax[i] = std::max(rmax[i], std::abs(c) * scale_[i] * cscale_[j]);
      for (int i = 0; i < m_; ++i)
        if (rmax[i] > 0) scale_[i] *= nearest_pow2_inverse(rmax[i]);
      for (int i = 0; i < m_; ++i)
        for (auto [j, c] : lp.rows[i].coef)
          cmax[j] = std::max(cmax[j], std::abs(c) * scale_[i] * cscale_[j]);
      for (int j = 0; j < n_; ++j)
        if (cmax[j] > 0) cscale_[j] *= nearest_pow2_inverse(cmax[j]);
    }

    cols_.resize(n_);
    b_.resize(m_);
    eq_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      for (auto [j, c] : lp.rows[i].coef)
        cols_[j].emplace_back(i, c * scale_[i] * cscale_[j]);
      b_[i] = lp.rows[i].rhs * scale_[i];
      eq_[i] = lp.rows[i].eq;
    }
    // Coalesce repeated row entries within a column: the dense basis
    // assembly stores one coefficient per position, so duplicates must be
    // summed here rather than left to overwrite each other.
    for (auto& col : cols_) {
      std::sort(col.begin(), col.end());
      size_t w = 0;
      for (size_t r = 0; r < col.size(); ++r) {
        if (w > 0 && col[w - 1].first == col[r].first)
          col[w - 1].second += col[r].second;
        else
          col[w++] = col[r];
      }
      col.resize(w);
    }

    // Internally x_j is stored divided by its column scale.
    lob_.assign(ncols_, 0.0);
    upb_.assign(ncols_, kInf);
    cost_.assign(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lob_[j] = lp.lo[j] / cscale_[j];
      upb_[j] = lp.hi[j] / cscale_[j];
      cost_[j] = lp.obj[j] * cscale_[j];
    }
    for (int i = 0; i < m_; ++i)
      if (eq_[i]) upb_[n_ + i] = 0.0;  // equality slack pinned at zero
    sigma_.assign(m_, 1.0);
  }

  LpSolution run() {
    LpSolution sol;
    sol.x.assign(n_, 0.0);
    start_basis();

    phase_ = 1;
    LpStatus st = iterate();
    if (st == LpStatus::Optimal) {
      double infeas = 0;
      for (int i = 0; i < m_; ++i) infeas += std::abs(xval_[art(i)]);
      double scale = 1.0;
      for (int i = 0; i < m_; ++i) scale += std::abs(b_[i]);
      if (infeas > 1e-9 * scale) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iters_;
        return sol;
      }
      phase_ = 2;
      stall_ = 0;
      for (int i = 0; i < m_; ++i) {
        upb_[art(i)] = 0.0;
        if (pos_[art(i)] < 0) xval_[art(i)] = 0.0;
      }
      st = iterate();
    } else if (st == LpStatus::Unbounded) {
      st = LpStatus::Breakdown;  // the start objective is bounded below
    }

    // Exact basic values for the reported point.
    if (!factorize() && st == LpStatus::Optimal) st = LpStatus::Breakdown;
    sol.status = st;
    sol.iterations = iters_;
    for (int j = 0; j < n_; ++j) sol.x[j] = xval_[j] * cscale_[j];
    for (int j = 0; j < n_; ++j) sol.objective += cost_[j] * xval_[j];
    // Violations are reported in the caller's units, not the scaled ones.
    for (int j = 0; j < ncols_; ++j) {
      double unit =
          j < n_ ? cscale_[j]
                 : 1.0 / scale_[j < n_ + m_ ? j - n_ : j - n_ - m_];
      if (lob_[j] > -kInf)
        sol.max_infeasibility =
            std::max(sol.max_infeasibility, (lob_[j] - xval_[j]) * unit);
      if (upb_[j] < kInf)
        sol.max_infeasibility =
            std::max(sol.max_infeasibility, (xval_[j] - upb_[j]) * unit);
    }
    std::vector<double> act(m_, 0.0);
    for (int j = 0; j < ncols_; ++j) {
      if (xval_[j] == 0.0) continue;
      col_axpy(j, xval_[j], act);
    }
    for (int i = 0; i < m_; ++i)
      sol.max_infeasibility =
          std::max(sol.max_infeasibility, std::abs(act[i] - b_[i]) / scale_[i]);
    return sol;
  }

 private:
  LpOptions opts_;
  int n_ = 0, m_ = 0, ncols_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> b_, scale_, cscale_, sigma_;
  std::vector<char> eq_;
  std::vector<double> lob_, upb_, cost_;

  std::vector<double> xval_;
  std::vector<int> basic_, pos_;   // pos_[col] = basis position or -1
  std::vector<char> at_up_;
  detail::Lu lu_;
  std::vector<Eta> etas_;
  int phase_ = 1;
  int iters_ = 0;
  int stall_ = 0;

  int slack(int i) const { return n_ + i; }
  int art(int i) const { return n_ + m_ + i; }

  double phase_cost(int j) const {
    if (phase_ == 1) return j >= n_ + m_ ? 1.0 : 0.0;
    return j < n_ ? cost_[j] : 0.0;
  }

  // y += t * column j (scaled rows).
  void col_axpy(int j, double t, std::vector<double>& y) const {
    if (j < n_) {
      for (auto [i, c] : cols_[j]) y[i] += t * c;
    } else if (j < n_ + m_) {
      y[j - n_] += t;
    } else {
      y[j - n_ - m_] += t * sigma_[j - n_ - m_];
    }
  }

  double col_dot(const std::vector<double>& y, int j) const {
    if (j < n_) {
      double s = 0;
      for (auto [i, c] : cols_[j]) s += y[i] * c;
      return s;
    }
    if (j < n_ + m_) return y[j - n_];
    return y[j - n_ - m_] * sigma_[j - n_ - m_];
  }

  void ftran(std::vector<double>& v) const {
    detail::lu_solve(lu_, v);
    for (const Eta& e : etas_) {
      double vr = v[e.r] / e.alpha[e.r];
      if (vr != 0.0)
        for (int i = 0; i < m_; ++i) v[i] -= e.alpha[i] * vr;
      v[e.r] = vr;
    }
  }

  // Checks that the represented basis inverse still reproduces column q:
  // B * alpha must equal A_q to working accuracy. The tolerance is relative
  // to the column being reproduced, not to alpha, so an ill-conditioned
  // basis cannot talk its way past the check.
  bool alpha_consistent(int q, const std::vector<double>& alpha) const {
    std::vector<double> prod(m_, 0.0);
    for (int p = 0; p < m_; ++p)
      if (alpha[p] != 0.0) col_axpy(basic_[p], alpha[p], prod);
    col_axpy(q, -1.0, prod);
    double res = 0;
    for (int i = 0; i < m_; ++i) res = std::max(res, std::abs(prod[i]));
    double aq = 1.0;
    if (q < n_) {
      aq = 0;
      for (auto [i, c] : cols_[q]) aq = std::max(aq, std::abs(c));
    }
    return res <= 1e-7 * (1.0 + aq);
  }

  void btran(std::vector<double>& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = 0;
      for (int i = 0; i < m_; ++i)
        if (i != it->r) s += it->alpha[i] * v[i];
      v[it->r] = (v[it->r] - s) / it->alpha[it->r];
    }
    detail::lu_solve_transpose(lu_, v);
  }

  void start_basis() {
    xval_.assign(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (lob_[j] > -kInf)
        xval_[j] = lob_[j];
      else if (upb_[j] < kInf)
        xval_[j] = upb_[j];
    }
    at_up_.assign(ncols_, 0);
    for (int j = 0; j < n_; ++j)
      if (lob_[j] <= -kInf && upb_[j] < kInf) at_up_[j] = 1;

    std::vector<double> resid = b_;
    for (int j = 0; j < n_; ++j)
      if (xval_[j] != 0.0) col_axpy(j, -xval_[j], resid);

    basic_.assign(m_, -1);
    pos_.assign(ncols_, -1);
    for (int i = 0; i < m_; ++i) {
      if (!eq_[i] && resid[i] >= 0) {
        basic_[i] = slack(i);
        xval_[slack(i)] = resid[i];
      } else {
        sigma_[i] = resid[i] < 0 ? -1.0 : 1.0;
        basic_[i] = art(i);
        xval_[art(i)] = std::abs(resid[i]);
      }
      pos_[basic_[i]] = i;
    }
    factorize();
  }

  bool factorize() {
    std::vector<double> B(static_cast<size_t>(m_) * m_, 0.0);
    for (int p = 0; p < m_; ++p) {
      int j = basic_[p];
      if (j < n_) {
        for (auto [i, c] : cols_[j]) B[static_cast<size_t>(i) * m_ + p] = c;
      } else if (j < n_ + m_) {
        B[static_cast<size_t>(j - n_) * m_ + p] = 1.0;
      } else {
        B[static_cast<size_t>(j - n_ - m_) * m_ + p] = sigma_[j - n_ - m_];
      }
    }
    lu_ = detail::lu_factor(std::move(B), m_);
    etas_.clear();
    if (!lu_.ok) return false;
    // Recompute basic values exactly from the nonbasic point.
    std::vector<double> rhs = b_;
    for (int j = 0; j < ncols_; ++j)
      if (pos_[j] < 0 && xval_[j] != 0.0) col_axpy(j, -xval_[j], rhs);
    ftran(rhs);
    for (int p = 0; p < m_; ++p) xval_[basic_[p]] = rhs[p];
    return true;
  }

  LpStatus iterate() {
    std::vector<double> y(m_), alpha(m_);
    while (true) {
      if (iters_ >= opts_.max_iter) return LpStatus::IterationLimit;

      for (int p = 0; p < m_; ++p) y[p] = phase_cost(basic_[p]);
      btran(y);

      // Entering column: most negative improvement, Bland's rule when stuck.
      int q = -1, dir = 0;
      double best = opts_.tol;
      bool bland = stall_ > 50;
      for (int j = 0; j < ncols_; ++j) {
        // Artificials only ever leave the basis. Letting one re-enter can
        // pair it with the matching slack column, which is the same unit
        // vector, and the basis turns exactly singular.
        if (pos_[j] >= 0 || lob_[j] == upb_[j] || j >= n_ + m_) continue;
        double r = phase_cost(j) - col_dot(y, j);
        int d = 0;
        if (!at_up_[j] && r < -opts_.tol)
          d = 1;
        else if (at_up_[j] && r > opts_.tol)
          d = -1;
        if (d == 0) continue;
        if (bland) {
          q = j;
          dir = d;
          break;
        }
        if (std::abs(r) > best) {
          best = std::abs(r);
          q = j;
          dir = d;
        }
      }
      if (q < 0) {
        // Only trust a conclusion drawn from a freshly factored basis: the
        // eta chain can drift through long degenerate stretches.
        if (!etas_.empty()) {
          if (!factorize()) return LpStatus::Breakdown;
          continue;
        }
        return LpStatus::Optimal;
      }

      std::fill(alpha.begin(), alpha.end(), 0.0);
      col_axpy(q, 1.0, alpha);
      ftran(alpha);
      if (!etas_.empty() && !alpha_consistent(q, alpha)) {
        // The represented inverse went stale; rebuild and recompute.
        if (!factorize()) return LpStatus::Breakdown;
        std::fill(alpha.begin(), alpha.end(), 0.0);
        col_axpy(q, 1.0, alpha);
        ftran(alpha);
      }

      // Two-pass ratio test with a small bound relaxation: pass one finds
      // the largest step that keeps every basic variable within a hair of
      // its bound, pass two takes the best-conditioned blocker inside that
      // step. A noise-sized entry then never sets the step on its own, so
      // near-dependent columns stay out of the basis.
      double anorm = 0;
      for (int p = 0; p < m_; ++p) anorm = std::max(anorm, std::abs(alpha[p]));
      const double dtol = 1e-12 * std::max(1.0, anorm);
      const double relax = 1e-10;
      double span = lob_[q] > -kInf && upb_[q] < kInf ? upb_[q] - lob_[q] : kInf;
      double tmax = span < kInf ? span + relax : kInf;
      for (int p = 0; p < m_; ++p) {
        double d = dir * alpha[p];
        if (std::abs(d) < dtol) continue;
        int bj = basic_[p];
        double t;
        if (d > 0) {
          if (lob_[bj] <= -kInf) continue;
          t = (xval_[bj] - lob_[bj] + relax) / d;
        } else {
          if (upb_[bj] >= kInf) continue;
          t = (xval_[bj] - upb_[bj] - relax) / d;
        }
        if (t < tmax) tmax = t;
      }
      if (tmax >= kInf) {
        if (!etas_.empty()) {
          if (!factorize()) return LpStatus::Breakdown;
          continue;
        }
        return LpStatus::Unbounded;
      }
      // A basic variable sitting beyond its bound (from earlier relaxed
      // steps) must read as a zero-step blocker, not push tmax negative.
      if (tmax < 0) tmax = 0;
      int r = -1;
      double best_piv = 0, texact = 0;
      for (int p = 0; p < m_; ++p) {
        double d = dir * alpha[p];
        if (std::abs(d) < dtol) continue;
        int bj = basic_[p];
        double t;
        if (d > 0) {
          if (lob_[bj] <= -kInf) continue;
          t = (xval_[bj] - lob_[bj]) / d;
        } else {
          if (upb_[bj] >= kInf) continue;
          t = (xval_[bj] - upb_[bj]) / d;
        }
        if (t < 0) t = 0;
        if (t > tmax) continue;
        // Under the anti-cycling rule the lowest column index leaves, not
        // the best-conditioned blocker; otherwise degenerate plateaus can
        // revisit the same bases forever.
        bool take = bland ? (r < 0 || basic_[p] < basic_[r])
                          : std::abs(alpha[p]) > best_piv;
        if (take) {
          best_piv = std::abs(alpha[p]);
          r = p;
          texact = t;
        }
      }

      bool flip = r < 0 || span < texact;
      if (flip && span >= kInf) {
        // No usable blocker and no opposite bound to run to; only a stale
        // representation can produce this, so rebuild and re-derive.
        if (!etas_.empty()) {
          if (!factorize()) return LpStatus::Breakdown;
          continue;
        }
        return LpStatus::Breakdown;
      }
      // A pivot much smaller than the transformed column makes the next
      // basis nearly parallel and wrecks its conditioning. Retry once from
      // a fresh factorization; if the geometry truly offers nothing better,
      // take the pivot but refactorize right away so the representation
      // never compounds through it.
      bool reluctant = !flip && best_piv < 3e-2 * anorm;
      if (reluctant && !etas_.empty()) {
        if (!factorize()) return LpStatus::Breakdown;
        continue;
      }

      ++iters_;
      double t = flip ? span : texact;
      stall_ = t > 1e-10 ? 0 : stall_ + 1;

      if (flip) {
        // The entering variable runs to its other bound; the basis stands.
        for (int p = 0; p < m_; ++p) xval_[basic_[p]] -= t * dir * alpha[p];
        xval_[q] = at_up_[q] ? lob_[q] : upb_[q];
        at_up_[q] = !at_up_[q];
        continue;
      }

      int leaving = basic_[r];
      for (int p = 0; p < m_; ++p)
        if (p != r) xval_[basic_[p]] -= t * dir * alpha[p];
      xval_[leaving] = dir * alpha[r] > 0 ? lob_[leaving] : upb_[leaving];
      at_up_[leaving] = dir * alpha[r] > 0 ? 0 : 1;
      pos_[leaving] = -1;
      xval_[q] = xval_[q] + dir * t;
      basic_[r] = q;
      pos_[q] = r;
      etas_.push_back({r, alpha});

      if (reluctant || static_cast<int>(etas_.size()) >= opts_.refactor_every)
        if (!factorize()) return LpStatus::Breakdown;
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
  Simplex s(lp, opts);
  return s.run();
}

}  // namespace decnet
