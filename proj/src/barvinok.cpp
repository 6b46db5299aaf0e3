#include "uncond/barvinok.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "uncond/errors.hpp"
#include "uncond/rng.hpp"

namespace uncond::bar {

namespace {

constexpr double kPi = 3.14159265358979323846;

int round_up(int value, int multiple) {
  return ((value + multiple - 1) / multiple) * multiple;
}

// ---- D-optimal design solve (the folded MVEE core) --------------------------

struct DesignResult {
  Eigen::MatrixXd x;       // X = V diag(u) V^T at the final weights
  Eigen::VectorXd u;
  double gap;
  int iterations;
};

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& v, const Eigen::VectorXd& u) {
  const int q = static_cast<int>(v.rows());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(q, q);
  x.selfadjointView<Eigen::Lower>().rankUpdate(
      v * u.cwiseMax(0.0).cwiseSqrt().asDiagonal());
  x.triangularView<Eigen::StrictlyUpper>() = x.transpose();
  return x;
}

// w_i = v_i^T X^{-1} v_i for every column, via one triangular solve. The
// whitened columns L^{-1} v are kept on request for cross terms.
bool leverage(const Eigen::MatrixXd& v, const Eigen::MatrixXd& x,
              Eigen::VectorXd& w, Eigen::MatrixXd* white = nullptr) {
  Eigen::LLT<Eigen::MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return false;
  Eigen::MatrixXd s = llt.matrixL().solve(v);
  w = s.colwise().squaredNorm().transpose();
  if (!w.allFinite()) return false;
  if (white) *white = std::move(s);
  return true;
}

// Relative duality gap of the design u with leverages w: max_i w_i / q - 1
// bounds the log det suboptimality by q log(1 + gap). On degenerate clouds
// the optimum can hold support points with leverage strictly below q, so the
// certificate is one-sided by nature.
double design_gap(const Eigen::VectorXd& w, int q) {
  return w.maxCoeff() / q - 1.0;
}

// The weight iterations identify the optimum quickly on clouds in general
// position but crawl when the lifted points lie on a low-dimensional variety:
// the optimal weights then spread over wide bands of near-tied columns and
// first-order exchanges move mass one pair at a time. The problem in shape
// space has no such degeneracy: the optimal M of "maximize log det M subject
// to v_i^T M v_i <= 1" is unique, so a log-barrier Newton path in M closes
// the remaining digits at quadratic rate. Weights are recovered from the
// path twice per stage, once from the barrier multipliers 1 / (1 - v_i^T M
// v_i) and once by a nonnegative least-squares fit of the band weights to
// the shape target M^{-1} / q; the multiplier form wins while the gap is
// large, the fit form survives the cancellation in 1 - s that caps the
// multipliers near machine precision, and every candidate is certified by
// its own leverages before it can replace u.
bool barrier_finish(const Eigen::MatrixXd& v, Eigen::VectorXd& u, double& gap,
                    double target) {
  const int q = static_cast<int>(v.rows());
  const int h = static_cast<int>(v.cols());
  const int dim = q * (q + 1) / 2;
  if (dim > 1024) return false;

  std::vector<int> ca(dim), cb(dim);
  Eigen::MatrixXd g(dim, h);
  {
    int c = 0;
    for (int a = 0; a < q; ++a)
      for (int b = a; b < q; ++b, ++c) {
        ca[c] = a;
        cb[c] = b;
        if (a == b)
          g.row(c) = v.row(a).cwiseProduct(v.row(a));
        else
          g.row(c) = 2.0 * v.row(a).cwiseProduct(v.row(b));
      }
  }

  const auto to_vec = [&](const Eigen::MatrixXd& mm) {
    Eigen::VectorXd out(dim);
    for (int c = 0; c < dim; ++c) out[c] = mm(ca[c], cb[c]);
    return out;
  };
  const auto to_mat = [&](const Eigen::VectorXd& vec) {
    Eigen::MatrixXd mm(q, q);
    for (int c = 0; c < dim; ++c) {
      mm(ca[c], cb[c]) = vec[c];
      mm(cb[c], ca[c]) = vec[c];
    }
    return mm;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto value = [&](const Eigen::MatrixXd& mm, double mu,
                         Eigen::VectorXd& s) -> double {
    s.noalias() = g.transpose() * to_vec(mm);
    if (!(s.maxCoeff() < 1.0 - 1e-15)) return -kInf;
    Eigen::LLT<Eigen::MatrixXd> llt(mm);
    if (llt.info() != Eigen::Success) return -kInf;
    const double logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return logdet + mu * (1.0 - s.array()).log().sum();
  };

  // consider a candidate weight vector: certify it by its own leverages and
  // keep it when it beats the incumbent
  const auto offer = [&](Eigen::VectorXd& cand) {
    const double total = cand.sum();
    if (!(total > 0.0)) return;
    cand /= total;
    Eigen::VectorXd w_cand;
    if (!leverage(v, design_matrix(v, cand), w_cand)) return;
    const double gap_cand = design_gap(w_cand, q);
    if (gap_cand < gap) {
      u = cand;
      gap = gap_cand;
    }
  };

  Eigen::VectorXd w;
  const Eigen::MatrixXd x = design_matrix(v, u);
  if (!leverage(v, x, w)) return false;
  Eigen::LLT<Eigen::MatrixXd> xllt(x);
  if (xllt.info() != Eigen::Success) return false;
  // start on the central path: scale X^{-1} to sit a little inside the
  // constraints and pick the mu whose centered slacks match that scale
  const double margin = 0.5 * std::max(gap, 1e-12);
  const double scale = w.maxCoeff() * (1.0 + margin);
  Eigen::MatrixXd m_mat = xllt.solve(Eigen::MatrixXd::Identity(q, q)) / scale;
  m_mat = ((m_mat + m_mat.transpose()) * 0.5).eval();
  double mu = (static_cast<double>(q) / h) * (1.0 - q / scale);
  if (!(mu > 0.0)) mu = std::max(gap, target) / h;

  Eigen::VectorXd s;
  double f_cur = value(m_mat, mu, s);
  if (!std::isfinite(f_cur)) return false;

  int steps_left = 400;
  for (int stage = 0; stage < 60 && steps_left > 0; ++stage) {
    for (int it = 0; it < 20 && steps_left > 0; ++it, --steps_left) {
      Eigen::LLT<Eigen::MatrixXd> mllt(m_mat);
      if (mllt.info() != Eigen::Success) return gap <= target;
      const Eigen::MatrixXd p = mllt.solve(Eigen::MatrixXd::Identity(q, q));
      const Eigen::VectorXd cvec = (1.0 - s.array()).inverse().matrix();
      Eigen::VectorXd grad(dim);
      for (int c = 0; c < dim; ++c)
        grad[c] = ca[c] == cb[c] ? p(ca[c], ca[c]) : 2.0 * p(ca[c], cb[c]);
      grad.noalias() -= mu * (g * cvec);
      Eigen::MatrixXd hess(dim, dim);
      for (int c = 0; c < dim; ++c) {
        Eigen::MatrixXd acm = p.col(ca[c]) * p.col(cb[c]).transpose();
        if (ca[c] != cb[c])
          acm += p.col(cb[c]) * p.col(ca[c]).transpose();
        for (int cc = 0; cc < dim; ++cc)
          hess(cc, c) = ca[cc] == cb[cc]
                            ? acm(ca[cc], ca[cc])
                            : acm(ca[cc], cb[cc]) + acm(cb[cc], ca[cc]);
      }
      hess.noalias() +=
          mu * (g * cvec.array().square().matrix().asDiagonal() * g.transpose());
      Eigen::LLT<Eigen::MatrixXd> hllt(hess);
      if (hllt.info() != Eigen::Success) {
        // extreme barrier stiffness can push the factorization over the
        // edge; damp the diagonal rather than abandoning the path
        double damp = 1e-14 * hess.diagonal().mean();
        for (int tries = 0; tries < 6 && hllt.info() != Eigen::Success;
             ++tries, damp *= 1e3)
          hllt.compute(hess + damp * Eigen::MatrixXd::Identity(dim, dim));
        if (hllt.info() != Eigen::Success) break;
      }
      const Eigen::VectorXd dvec = hllt.solve(grad);
      const double lambda2 = grad.dot(dvec);
      // the recovered weights inherit any centering error amplified by the
      // barrier stiffness, so center essentially to machine precision
      if (!(lambda2 > 1e-16)) break;
      const Eigen::MatrixXd dmat = to_mat(dvec);
      bool accepted = false;
      double t = 1.0;
      for (int bs = 0; bs < 40; ++bs, t *= 0.5) {
        Eigen::VectorXd s_try;
        const Eigen::MatrixXd m_try = m_mat + t * dmat;
        const double f_try = value(m_try, mu, s_try);
        const bool near_center =
            lambda2 <= 1e-12 && f_try >= f_cur - 1e-13 * std::abs(f_cur);
        if (std::isfinite(f_try) &&
            (f_try >= f_cur + 0.25 * t * lambda2 || near_center)) {
          m_mat = m_try;
          s = std::move(s_try);
          f_cur = f_try;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }

    Eigen::VectorXd u_rec = (1.0 - s.array()).inverse().matrix();
    offer(u_rec);
    if (gap <= target) return true;

    // the multipliers locate the support band; refit their weights against
    // the shape target, clipping negatives between passes
    {
      Eigen::LLT<Eigen::MatrixXd> mllt(m_mat);
      if (mllt.info() == Eigen::Success) {
        const Eigen::MatrixXd tshape =
            mllt.solve(Eigen::MatrixXd::Identity(q, q)) / q;
        Eigen::VectorXd rhs(dim);
        for (int c = 0; c < dim; ++c)
          rhs[c] = ca[c] == cb[c] ? tshape(ca[c], ca[c])
                                  : 2.0 * tshape(ca[c], cb[c]);
        std::vector<int> band;
        const double band_cut = 1e-3 / h;
        const double u_rec_sum = u_rec.sum();
        for (int i = 0; i < h; ++i)
          if (u_rec[i] >= band_cut * u_rec_sum) band.push_back(i);
        Eigen::VectorXd u_fit = Eigen::VectorXd::Zero(h);
        for (int pass = 0; pass < 3 && static_cast<int>(band.size()) >= q;
             ++pass) {
          Eigen::MatrixXd gb(dim, band.size());
          for (size_t j = 0; j < band.size(); ++j) gb.col(j) = g.col(band[j]);
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gb);
          cod.setThreshold(1e-12);
          const Eigen::VectorXd ub = cod.solve(rhs);
          std::vector<int> keep;
          u_fit.setZero();
          for (size_t j = 0; j < band.size(); ++j)
            if (ub[j] > 0.0) {
              u_fit[band[j]] = ub[j];
              keep.push_back(band[j]);
            }
          if (keep.size() == band.size()) break;
          band.swap(keep);
        }
        offer(u_fit);
        if (gap <= target) return true;
      }
    }

    mu *= 0.2;
    if (mu < 1e-17) break;
    f_cur = value(m_mat, mu, s);
    if (!std::isfinite(f_cur)) return gap <= target;
  }
  return gap <= target;
}

DesignResult solve_design(const Eigen::MatrixXd& v, const EllipsoidOptions& opts,
                          const Eigen::VectorXd* warm) {
  const int q = static_cast<int>(v.rows());
  const int h = static_cast<int>(v.cols());
  if (!v.allFinite())
    throw DegenerateCloudError("ellipsoid: cloud has non-finite points");
  if (h < q)
    throw DegenerateCloudError("ellipsoid: cloud does not span the lifted space");

  Eigen::VectorXd u;
  if (warm && warm->size() == h && warm->allFinite() &&
      (warm->array() >= 0.0).all() && warm->sum() > 0.0) {
    u = *warm / warm->sum();
  } else {
    u = Eigen::VectorXd::Constant(h, 1.0 / h);
  }

  Eigen::VectorXd w;
  Eigen::MatrixXd white;
  double gap = 0.0;
  double window_gap = std::numeric_limits<double>::infinity();
  const bool finisher = opts.polish && q * (q + 1) / 2 <= 1024;
  int iter = 0;
  for (;; ++iter) {
    if (!leverage(v, design_matrix(v, u), w, &white)) {
      if (iter == 0 && warm) {
        // a stale warm start can be rank-deficient; retry cold once
        u = Eigen::VectorXd::Constant(h, 1.0 / h);
        if (leverage(v, design_matrix(v, u), w, &white)) {
          warm = nullptr;
        } else {
          throw DegenerateCloudError("ellipsoid: cloud does not span the lifted space");
        }
      } else if (iter == 0) {
        throw DegenerateCloudError("ellipsoid: cloud does not span the lifted space");
      } else {
        throw NumericalError("ellipsoid: design matrix lost positive definiteness");
      }
    }
    int hi_i = 0, lo_i = -1;
    for (int i = 1; i < h; ++i)
      if (w[i] > w[hi_i]) hi_i = i;
    for (int i = 0; i < h; ++i)
      if (u[i] > 0.0 && (lo_i < 0 || w[i] < w[lo_i])) lo_i = i;
    const double gap_hi = w[hi_i] / q - 1.0;
    const double gap_lo = 1.0 - w[lo_i] / q;
    gap = gap_hi;
    if (gap <= opts.tol || iter >= opts.max_iters) break;
    // a window with under 3% relative progress will not reach the tolerance
    // inside any sane budget; on degenerate clouds the finisher takes over
    if (finisher && iter > 0 && iter % 4096 == 0) {
      if (gap > 0.97 * window_gap) break;
      window_gap = gap;
    }
    if (gap_hi >= gap_lo) {
      const double wp = w[hi_i];
      const double tau = (wp / q - 1.0) / (wp - 1.0);
      u *= (1.0 - tau);
      u[hi_i] += tau;
    } else {
      // vertex exchange: shift mass from the weakest support point to the
      // strongest one at the pairwise log-det optimum. Plain away steps
      // crawl on densely sampled smooth clouds, where near-collinear
      // neighbors trade tiny weight corrections for thousands of rounds;
      // the exchange moves the whole correction at once (and a
      // near-parallel pair degenerates into a full transfer).
      const double whl = white.col(hi_i).dot(white.col(lo_i));
      const double denom = w[hi_i] * w[lo_i] - whl * whl;
      const double tau =
          denom > 0.0 ? (w[hi_i] - w[lo_i]) / (2.0 * denom)
                      : std::numeric_limits<double>::infinity();
      if (tau >= u[lo_i]) {
        u[hi_i] += u[lo_i];
        u[lo_i] = 0.0;
      } else {
        u[hi_i] += tau;
        u[lo_i] -= tau;
      }
    }
  }

  if (finisher && gap > opts.tol) barrier_finish(v, u, gap, opts.tol);

  if (gap > opts.tol)
    throw ConvergenceError("ellipsoid: duality gap above tolerance after " +
                               std::to_string(iter) + " iterations",
                           gap);

  return {design_matrix(v, u), u, gap, iter};
}

// Columns must come in exact antipodal pairs; returns the distinct half.
Eigen::MatrixXd fold_paired(const Eigen::MatrixXd& points) {
  const int m = static_cast<int>(points.cols());
  if (m < 2 || m % 2 != 0)
    throw InvalidParameterError("ellipsoid: cloud must be antipodally paired");
  const int h = m / 2;
  if (((points.rightCols(h) + points.leftCols(h)).cwiseAbs().maxCoeff()) != 0.0)
    throw InvalidParameterError(
        "ellipsoid: column j + m/2 must be the exact negation of column j");
  return points.leftCols(h);
}

Eigen::MatrixXd quadform_from_design(const DesignResult& design,
                                     const mi::MultiIndexSet& set) {
  // cheap conditioning proxy from the Cholesky diagonal; the exact
  // eigenvalue check lives in the public ellipsoid-to-quadform path
  Eigen::LLT<Eigen::MatrixXd> llt(design.x);
  if (llt.info() != Eigen::Success)
    throw NumericalError("quadform: design matrix is not positive definite");
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  if (!(ratio * ratio <= 1e12))
    throw NumericalError("quadform: ellipsoid condition number exceeds 1e12");
  const Eigen::VectorXd w = set.weights();
  Eigen::MatrixXd a = w.asDiagonal() * design.x * w.asDiagonal();
  a *= static_cast<double>(design.x.rows());
  a = ((a + a.transpose()) * 0.5).eval();
  return a;
}

void check_conditioning(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw NumericalError("quadform: ellipsoid condition number exceeds 1e12");
}

Eigen::MatrixXd lift_columns(const mi::SetPtr& set, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd points(set->size(), samples.cols());
  for (int j = 0; j < samples.cols(); ++j)
    points.col(j) = mi::tensor_lift(samples.col(j), *set);
  return points;
}

}  // namespace

Eigen::MatrixXd sphere_directions(int k, int m, uint64_t seed) {
  if (k < 1) throw InvalidParameterError("sphere_directions: k must be >= 1");
  if (m < 2) throw InvalidParameterError("sphere_directions: m must be >= 2");
  if (k == 1) {
    Eigen::MatrixXd g(1, 2);
    g(0, 0) = 1.0;
    g(0, 1) = -1.0;
    return g;
  }
  if (k == 2) {
    m = round_up(m, 4);
    const int half = m / 2;
    const int quarter = half / 2;
    Eigen::MatrixXd g(2, m);
    for (int j = 0; j < quarter; ++j) {
      const double t = kPi * j / half;
      g(0, j) = std::cos(t);
      g(1, j) = std::sin(t);
    }
    g(0, quarter) = 0.0;
    g(1, quarter) = 1.0;
    // mirror the first quadrant so sign flips map grid points to grid
    // points bitwise
    for (int j = 1; j < quarter; ++j) {
      g(0, half - j) = -g(0, j);
      g(1, half - j) = g(1, j);
    }
    g.rightCols(half) = -g.leftCols(half);
    return g;
  }
  if (k <= 16) {
    const int64_t orbit = int64_t{1} << k;
    const int64_t half_orbit = orbit / 2;
    const int base_count =
        static_cast<int>((m + orbit - 1) / orbit) > 0
            ? static_cast<int>((m + orbit - 1) / orbit)
            : 1;
    const int half = static_cast<int>(base_count * half_orbit);
    Eigen::MatrixXd g(k, 2 * half);
    rng::Stream stream(seed);
    Eigen::VectorXd shift(k);
    for (int i = 0; i < k; ++i) shift[i] = stream.next_uniform();
    Eigen::VectorXd base(k);
    for (int t = 0; t < base_count; ++t) {
      const Eigen::VectorXd uu = rng::halton_point(t, k);
      for (int i = 0; i < k; ++i) {
        double p = uu[i] + shift[i];
        if (p >= 1.0) p -= 1.0;
        p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
        base[i] = std::abs(rng::inverse_normal_cdf(p));
      }
      base.normalize();
      for (int64_t s = 0; s < half_orbit; ++s) {
        const int col = static_cast<int>(t * half_orbit + s);
        g(0, col) = base[0];
        for (int i = 1; i < k; ++i)
          g(i, col) = ((s >> (i - 1)) & 1) ? -base[i] : base[i];
      }
    }
    g.rightCols(half) = -g.leftCols(half);
    return g;
  }
  return norms::sphere_samples(k, m, seed);
}

int default_directions(int k, int d) {
  const auto set = mi::enumerate_multiindices(k, d);
  return 64 * static_cast<int>(set->size());
}

Eigen::MatrixXd dual_sphere_samples(const norms::Norm& norm_k, int m,
                                    uint64_t seed, int threads) {
  if (m < 2) throw InvalidParameterError("dual_sphere_samples: m must be >= 2");
  const Eigen::MatrixXd dirs = sphere_directions(norm_k.dim(), m, seed);
  const int half = static_cast<int>(dirs.cols()) / 2;
  Eigen::VectorXd radii;
  norm_k.dual_many(dirs.leftCols(half), radii, threads);
  Eigen::MatrixXd samples(dirs.rows(), dirs.cols());
  for (int j = 0; j < half; ++j) samples.col(j) = dirs.col(j) / radii[j];
  samples.rightCols(half) = -samples.leftCols(half);
  return samples;
}

LiftedCloud lift_cloud(const Eigen::MatrixXd& samples, int d) {
  if (d < 1 || d % 2 == 0)
    throw InvalidParameterError("lift_cloud: d must be odd and positive");
  if (samples.cols() < 2)
    throw InvalidParameterError("lift_cloud: need at least one antipodal pair");
  const int k = static_cast<int>(samples.rows());
  const mi::SetPtr set = mi::enumerate_multiindices(k, d);
  if (set->size() > 200)
    throw InvalidParameterError("lift_cloud: |M_d| exceeds the 200 cap");
  return {set, lift_columns(set, samples)};
}

CenteredEllipsoid lowner_ellipsoid(const Eigen::MatrixXd& paired_points,
                                   const EllipsoidOptions& opts,
                                   const Eigen::VectorXd* warm) {
  const auto folded = fold_paired(paired_points);
  const DesignResult design = solve_design(folded, opts, warm);
  const int q = static_cast<int>(design.x.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(design.x);
  Eigen::MatrixXd shape =
      llt.solve(Eigen::MatrixXd::Identity(q, q)) / static_cast<double>(q);
  shape = ((shape + shape.transpose()) * 0.5).eval();
  return {shape, design.u, design.gap, design.iterations};
}

CenteredEllipsoid lowner_ellipsoid(const Eigen::MatrixXd& paired_points,
                                   double tol) {
  EllipsoidOptions opts;
  opts.tol = tol;
  return lowner_ellipsoid(paired_points, opts);
}

QuadFormA quadform_from_ellipsoid(const CenteredEllipsoid& ellipsoid,
                                  const mi::SetPtr& set) {
  if (!set || set->size() != static_cast<int>(ellipsoid.shape.rows()))
    throw InvalidParameterError("quadform: index set does not match the shape");
  const int q = static_cast<int>(set->size());
  Eigen::LLT<Eigen::MatrixXd> llt(ellipsoid.shape);
  if (llt.info() != Eigen::Success)
    throw NumericalError("quadform: shape matrix is not positive definite");
  check_conditioning(ellipsoid.shape);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::VectorXd w = set->weights();
  Eigen::MatrixXd a = w.asDiagonal() * inv * w.asDiagonal();
  a = ((a + a.transpose()) * 0.5).eval();
  return {set, a};
}

QuadFormA quadform_of_samples(const Eigen::MatrixXd& samples, int d,
                              const EllipsoidOptions& opts,
                              const Eigen::VectorXd* warm_in,
                              Eigen::VectorXd* warm_out) {
  const LiftedCloud cloud = lift_cloud(samples, d);
  const auto folded = fold_paired(cloud.points);
  const DesignResult design = solve_design(folded, opts, warm_in);
  if (warm_out) *warm_out = design.u;
  return {cloud.set, quadform_from_design(design, *cloud.set)};
}

double poly_eval(const QuadFormA& a, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd b = mi::tensor_lift(x, *a.set);
  return b.dot(a.entries.selfadjointView<Eigen::Lower>() * b);
}

par::MinMax sandwich_check(const QuadFormA& a, const norms::Norm& norm_k,
                           int samples, uint64_t seed, int threads) {
  if (samples < 2)
    throw InvalidParameterError("sandwich_check: samples must be >= 2");
  if (norm_k.dim() != a.set->k())
    throw InvalidParameterError("sandwich_check: dimension mismatch");
  const Eigen::MatrixXd dirs = norms::sphere_samples(a.set->k(), samples, seed);
  const int half = static_cast<int>(dirs.cols()) / 2;
  const double exponent = 2.0 * a.set->d();
  Eigen::VectorXd ratio(half);
  par::map_indexed(half, threads, [&](int64_t j) {
    const double nv = norm_k.eval(dirs.col(j));
    ratio[j] = poly_eval(a, dirs.col(j)) / std::pow(nv, exponent);
  });
  return par::min_max(ratio.data(), half, threads);
}

Eigen::VectorXd character_signs(const mi::MultiIndexSet& set,
                                const Eigen::VectorXi& delta) {
  if (delta.size() != set.k())
    throw InvalidParameterError("character_signs: sign vector length mismatch");
  for (int i = 0; i < delta.size(); ++i)
    if (delta[i] != 1 && delta[i] != -1)
      throw InvalidParameterError("character_signs: entries must be +-1");
  Eigen::VectorXd signs(set.size());
  for (int a = 0; a < set.size(); ++a) {
    const mi::MultiIndex& alpha = set.member(a);
    int odd = 0;
    for (int i = 0; i < delta.size(); ++i)
      if (delta[i] == -1 && alpha[i] % 2 == 1) odd ^= 1;
    signs[a] = odd ? -1.0 : 1.0;
  }
  return signs;
}

double equivariance_residual(const norms::Norm& norm_k,
                             const Eigen::VectorXi& delta, int d, int m,
                             uint64_t seed, const EllipsoidOptions& opts) {
  if (m <= 0) m = default_directions(norm_k.dim(), d);
  const Eigen::MatrixXd samples = dual_sphere_samples(norm_k, m, seed, opts.threads);
  const QuadFormA base = quadform_of_samples(samples, d, opts);
  // the flipped norm's dual ball is the delta-image, sample for sample
  Eigen::MatrixXd flipped = samples;
  for (int i = 0; i < delta.size(); ++i)
    if (delta[i] == -1) flipped.row(i) = -flipped.row(i);
  const QuadFormA flip = quadform_of_samples(flipped, d, opts);
  const Eigen::VectorXd signs = character_signs(*base.set, delta);
  const Eigen::MatrixXd expected =
      signs.asDiagonal() * base.entries * signs.asDiagonal();
  return (flip.entries - expected).cwiseAbs().maxCoeff() /
         base.entries.cwiseAbs().maxCoeff();
}

bool equivariance_check(const norms::Norm& norm_k, const Eigen::VectorXi& delta,
                        int d, double tol, int m, uint64_t seed,
                        const EllipsoidOptions& opts) {
  return equivariance_residual(norm_k, delta, d, m, seed, opts) <= tol;
}

QuadFormPipeline::QuadFormPipeline(norms::NormPtr ambient, int k, int d, int m,
                                   uint64_t seed, const EllipsoidOptions& opts)
    : ambient_(std::move(ambient)), d_(d), opts_(opts) {
  if (d < 1 || d % 2 == 0)
    throw InvalidParameterError("pipeline: d must be odd and positive");
  set_ = mi::enumerate_multiindices(k, d);
  if (set_->size() > 200)
    throw InvalidParameterError("pipeline: |M_d| exceeds the 200 cap");
  if (m <= 0) m = default_directions(k, d);
  dirs_ = sphere_directions(k, m, seed);
}

Eigen::MatrixXd QuadFormPipeline::quadform_of(const norms::Norm& norm_k,
                                              const Eigen::VectorXd& warm_in,
                                              Eigen::VectorXd* warm_out) const {
  if (norm_k.dim() != k())
    throw InvalidParameterError("pipeline: norm dimension mismatch");
  const int half = static_cast<int>(dirs_.cols()) / 2;
  Eigen::VectorXd radii;
  norm_k.dual_many(dirs_.leftCols(half), radii, opts_.threads);
  Eigen::MatrixXd samples(dirs_.rows(), half);
  for (int j = 0; j < half; ++j) samples.col(j) = dirs_.col(j) / radii[j];
  const Eigen::MatrixXd folded = lift_columns(set_, samples);
  const Eigen::VectorXd* warm = warm_in.size() > 0 ? &warm_in : nullptr;
  const DesignResult design = solve_design(folded, opts_, warm);
  if (warm_out) *warm_out = design.u;
  return quadform_from_design(design, *set_);
}

Eigen::MatrixXd QuadFormPipeline::quadform(const Eigen::MatrixXd& frame,
                                           const Eigen::VectorXd& warm_in,
                                           Eigen::VectorXd* warm_out) const {
  if (!ambient_) throw InvalidParameterError("pipeline: no ambient norm");
  if (frame.rows() != ambient_->dim() || frame.cols() != k())
    throw InvalidParameterError("pipeline: frame shape mismatch");
  const norms::NormPtr restricted = ambient_->restricted(frame);
  return quadform_of(*restricted, warm_in, warm_out);
}

Eigen::MatrixXd QuadFormPipeline::quadform(const Eigen::MatrixXd& frame) {
  return quadform(frame, warm_, &warm_);
}

}  // namespace uncond::bar
