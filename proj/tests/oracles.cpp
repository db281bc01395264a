#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace oracle {

TripletDistanceTable random_table(std::mt19937_64& rng, std::size_t m, std::size_t m_prime,
                                  std::size_t T) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IdList probes;
  Matrix d_plus(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(T));
  std::vector<Matrix> d_minus;
  std::vector<IdList> ids;
  for (std::size_t i = 0; i < m; ++i) {
    probes.push_back("p" + std::to_string(i));
    for (std::size_t t = 0; t < T; ++t) d_plus(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = u(rng);
    Matrix block(static_cast<Eigen::Index>(m_prime), static_cast<Eigen::Index>(T));
    for (Eigen::Index j = 0; j < block.rows(); ++j) {
      for (Eigen::Index t = 0; t < block.cols(); ++t) block(j, t) = u(rng);
    }
    d_minus.push_back(block);
    IdList c;
    for (std::size_t j = 0; j < m_prime; ++j) c.push_back("c" + std::to_string(j));
    ids.push_back(c);
  }
  return TripletDistanceTable(probes, d_plus, d_minus, ids);
}

namespace {

double score(const TripletDistanceTable& table, const Vector& w, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t t = 0; t < table.T(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    s += w[ti] * (table.d_minus(i)(static_cast<Eigen::Index>(j), ti) -
                  table.d_plus()(static_cast<Eigen::Index>(i), ti));
  }
  return s;
}

}  // namespace

std::vector<std::vector<std::size_t>> positions(const TripletDistanceTable& table, const Vector& w) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < table.m(); ++i) {
    std::vector<std::pair<std::pair<double, std::string>, std::size_t>> keyed;
    for (std::size_t j = 0; j < table.m_prime(); ++j) {
      keyed.push_back({{score(table, w, i, j), table.candidate_ids(i)[j]}, j});
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> row;
    for (const auto& kv : keyed) row.push_back(kv.second);
    out.push_back(row);
  }
  return out;
}

double violation(const TripletDistanceTable& table, const Vector& w, std::size_t k,
                 const std::vector<std::vector<std::size_t>>& order,
                 const std::vector<std::vector<int>>& bits) {
  double total = 0.0;
  for (std::size_t i = 0; i < table.m(); ++i) {
    for (std::size_t pos = 0; pos < table.m_prime(); ++pos) {
      if (!bits[i][pos]) continue;
      const double loss = pos < k ? 1.0 : 0.0;
      total += loss - score(table, w, i, order[i][pos]);
    }
  }
  return total / (static_cast<double>(table.m()) * static_cast<double>(k));
}

double exhaustive_max_violation(const TripletDistanceTable& table, const Vector& w, std::size_t k) {
  const auto order = positions(table, w);
  const std::size_t m = table.m();
  const std::size_t mp = table.m_prime();
  const std::size_t cells = m * mp;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << cells); ++code) {
    std::vector<std::vector<int>> bits(m, std::vector<int>(mp, 0));
    for (std::size_t c = 0; c < cells; ++c) bits[c / mp][c % mp] = static_cast<int>((code >> c) & 1u);
    best = std::max(best, violation(table, w, k, order, bits));
  }
  return best;
}

void full_constraint_family(const TripletDistanceTable& table, std::size_t k,
                            std::vector<Vector>& a, std::vector<double>& delta) {
  const std::size_t m = table.m();
  const std::size_t mp = table.m_prime();
  const std::size_t cells = m * mp;
  const double norm = 1.0 / (static_cast<double>(m) * static_cast<double>(k));
  std::set<std::vector<double>> seen;
  a.clear();
  delta.clear();
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << cells); ++code) {
    Vector ac = Vector::Zero(static_cast<Eigen::Index>(table.T()));
    double dc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t count = 0;
      for (std::size_t j = 0; j < mp; ++j) {
        if (!((code >> (i * mp + j)) & 1u)) continue;
        ++count;
        for (std::size_t t = 0; t < table.T(); ++t) {
          const auto ti = static_cast<Eigen::Index>(t);
          ac[ti] += table.d_minus(i)(static_cast<Eigen::Index>(j), ti) -
                    table.d_plus()(static_cast<Eigen::Index>(i), ti);
        }
      }
      dc += static_cast<double>(std::min(count, k));
    }
    ac *= norm;
    dc *= norm;
    std::vector<double> key(ac.data(), ac.data() + ac.size());
    key.push_back(dc);
    if (seen.insert(key).second) {
      a.push_back(ac);
      delta.push_back(dc);
    }
  }
}

double primal_objective(const std::vector<Vector>& a, const std::vector<double>& delta, double nu,
                        const Vector& w) {
  double xi = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) xi = std::max(xi, delta[c] - a[c].dot(w));
  return 0.5 * w.squaredNorm() + nu * xi;
}

namespace {

// Euclidean projection onto {x >= 0, sum x <= cap}.
Vector project_capped(const Vector& y, double cap) {
  Vector x = y.cwiseMax(0.0);
  if (x.sum() <= cap) return x;
  std::vector<double> v(y.data(), y.data() + y.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    cumulative += v[i];
    const double t = (cumulative - cap) / static_cast<double>(i + 1);
    if (i + 1 == v.size() || v[i + 1] <= t) {
      theta = t;
      break;
    }
  }
  return (y.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace

namespace {

struct DualProblem {
  Matrix A;  // T x C, columns a_c
  Vector d;
  double nu = 0.0;
  const std::vector<Vector>* a = nullptr;
  const std::vector<double>* delta = nullptr;

  double dual(const Vector& alpha) const {
    return d.dot(alpha) - 0.5 * (A * alpha).cwiseMax(0.0).squaredNorm();
  }
  double primal(const Vector& w) const { return primal_objective(*a, *delta, nu, w); }
};

// Active-set polish: guess the support from the iterate, solve the KKT
// equalities on it, and tighten the bracket with the result. Any feasible
// multiplier vector gives a valid lower bound and any w >= 0 a valid upper
// bound, so a wrong guess cannot corrupt the certificate.
void polish(const DualProblem& p, const Vector& alpha0, QpBracket& out) {
  const Eigen::Index C = p.A.cols();
  const Eigen::Index T = p.A.rows();
  const Vector w0 = (p.A * alpha0).cwiseMax(0.0);
  for (double tol : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
    for (int slack_free = 0; slack_free < 2; ++slack_free) {
      std::vector<Eigen::Index> S;
      std::vector<Eigen::Index> F;
      for (Eigen::Index c = 0; c < C; ++c) {
        if (alpha0[c] > tol * std::max(1.0, p.nu)) S.push_back(c);
      }
      for (Eigen::Index t = 0; t < T; ++t) {
        if (w0[t] > tol) F.push_back(t);
      }
      if (S.empty()) continue;
      const auto nf = static_cast<Eigen::Index>(F.size());
      const auto ns = static_cast<Eigen::Index>(S.size());
      const Eigen::Index nx = nf + slack_free + ns;
      const Eigen::Index ne = nf + ns + slack_free;
      Matrix K = Matrix::Zero(ne, nx);
      Vector rhs = Vector::Zero(ne);
      // w_F - A_FS alpha_S = 0
      for (Eigen::Index i = 0; i < nf; ++i) {
        K(i, i) = 1.0;
        for (Eigen::Index j = 0; j < ns; ++j) K(i, nf + slack_free + j) = -p.A(F[i], S[j]);
      }
      // a_c^T w + xi = delta_c on S
      for (Eigen::Index j = 0; j < ns; ++j) {
        for (Eigen::Index i = 0; i < nf; ++i) K(nf + j, i) = p.A(F[i], S[j]);
        if (slack_free) K(nf + j, nf) = 1.0;
        rhs[nf + j] = p.d[S[j]];
      }
      if (slack_free) {
        for (Eigen::Index j = 0; j < ns; ++j) K(nf + ns, nf + 1 + j) = 1.0;
        rhs[nf + ns] = p.nu;
      }
      const Vector x = K.completeOrthogonalDecomposition().solve(rhs);
      Vector w = Vector::Zero(T);
      for (Eigen::Index i = 0; i < nf; ++i) w[F[i]] = std::max(0.0, x[i]);
      Vector alpha = Vector::Zero(C);
      for (Eigen::Index j = 0; j < ns; ++j) alpha[S[j]] = std::max(0.0, x[nf + slack_free + j]);
      if (alpha.sum() > p.nu) alpha *= p.nu / alpha.sum();
      const double upper = p.primal(w);
      if (upper < out.upper) {
        out.upper = upper;
        out.w = w;
      }
      out.lower = std::max(out.lower, p.dual(alpha));
    }
  }
}

}  // namespace

QpBracket dual_projected_gradient(const std::vector<Vector>& a, const std::vector<double>& delta,
                                  double nu, double gap_target, std::size_t max_iterations) {
  const auto C = static_cast<Eigen::Index>(a.size());
  QpBracket out;
  if (C == 0) return out;
  const Eigen::Index T = a.front().size();
  DualProblem p;
  p.A = Matrix(T, C);
  p.d = Vector(C);
  p.nu = nu;
  p.a = &a;
  p.delta = &delta;
  for (Eigen::Index c = 0; c < C; ++c) {
    p.A.col(c) = a[static_cast<std::size_t>(c)];
    p.d[c] = delta[static_cast<std::size_t>(c)];
  }
  const double lipschitz = std::max(p.A.squaredNorm(), 1e-12);  // Frobenius bound on ||A||_2^2
  const double step = 1.0 / lipschitz;
  const auto gradient = [&](const Vector& alpha) {
    return Vector(p.d - p.A.transpose() * (p.A * alpha).cwiseMax(0.0));
  };

  Vector alpha = Vector::Zero(C);
  Vector y = alpha;
  double t = 1.0;
  double value = p.dual(alpha);
  out.lower = value;
  out.w = Vector::Zero(T);
  out.upper = p.primal(out.w);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const Vector next = project_capped(y + step * gradient(y), nu);
    const double next_value = p.dual(next);
    if (next_value < value) {
      // adaptive restart keeps the ascent monotone
      y = alpha;
      t = 1.0;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - alpha);
      alpha = next;
      value = next_value;
      t = t_next;
      out.lower = std::max(out.lower, value);
    }
    if (it % 200 == 0 || it == max_iterations) {
      const Vector w = (p.A * alpha).cwiseMax(0.0);
      const double upper = p.primal(w);
      if (upper < out.upper) {
        out.upper = upper;
        out.w = w;
      }
      if (it % 2000 == 0) polish(p, alpha, out);
      out.iterations = it;
      if (out.upper - out.lower <= gap_target) break;
    }
  }
  polish(p, alpha, out);

  double xi = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) xi = std::max(xi, delta[c] - a[c].dot(out.w));
  out.xi = xi;
  return out;
}

double per_triplet_optimum_1d(const std::vector<double>& margins, double nu) {
  const double scale = nu / static_cast<double>(margins.size());
  const auto f = [&](double w) {
    double s = 0.5 * w * w;
    for (double c : margins) s += scale * std::max(0.0, 1.0 - w * c);
    return s;
  };
  std::vector<double> knots{0.0};
  for (double c : margins) {
    if (c > 0.0) knots.push_back(1.0 / c);
  }
  std::sort(knots.begin(), knots.end());
  knots.push_back(std::numeric_limits<double>::infinity());
  double best = f(0.0);
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double lo = knots[s];
    const double hi = knots[s + 1];
    const double mid = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1.0;
    double slope = 0.0;  // sum of c over hinges active inside (lo, hi)
    for (double c : margins) {
      if (1.0 - mid * c > 0.0) slope += c;
    }
    double w = scale * slope;
    w = std::clamp(w, lo, std::isfinite(hi) ? hi : std::max(lo, w));
    best = std::min({best, f(w), f(lo)});
    if (std::isfinite(hi)) best = std::min(best, f(hi));
  }
  return best;
}

double averaged_optimum_1d(const std::vector<double>& margins, double nu) {
  const double c = std::accumulate(margins.begin(), margins.end(), 0.0) /
                   static_cast<double>(margins.size());
  if (c <= 0.0) return nu;
  const double w = std::min(nu * c, 1.0 / c);
  return 0.5 * w * w + nu * std::max(0.0, 1.0 - w * c);
}

double chi2(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double den = a[d] + b[d];
    if (den > 0.0) s += (a[d] - b[d]) * (a[d] - b[d]) / den;
  }
  return s;
}

Matrix chi2_gram(const Matrix& x, const Matrix& y, double sigma2) {
  Matrix k(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      k(i, j) = std::exp(-chi2(x.row(i).transpose(), y.row(j).transpose()) / sigma2);
    }
  }
  return k;
}

Vector klfda_eigenvalues(const Matrix& gram, const IdList& labels, double beta,
                         std::size_t neighbours) {
  const auto n = static_cast<std::size_t>(gram.rows());
  const auto d2 = [&](std::size_t i, std::size_t j) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    return std::max(0.0, gram(a, a) + gram(b, b) - 2.0 * gram(a, b));
  };
  std::map<std::string, std::size_t> class_size;
  for (const auto& l : labels) ++class_size[l];

  std::vector<double> sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> same;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) same.push_back(d2(i, j));
    }
    std::sort(same.begin(), same.end());
    sigma[i] = std::sqrt(same[std::min(neighbours, same.size()) - 1]);
  }

  Matrix s_b = Matrix::Zero(gram.rows(), gram.rows());
  Matrix s_w = Matrix::Zero(gram.rows(), gram.rows());
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double wb = 1.0 / dn;
      double ww = 0.0;
      if (labels[i] == labels[j]) {
        const double dist = d2(i, j);
        const double s = sigma[i] * sigma[j];
        const double aff = dist == 0.0 ? 1.0 : (s > 0.0 ? std::exp(-dist / s) : 0.0);
        const double nc = static_cast<double>(class_size[labels[i]]);
        wb = aff * (1.0 / dn - 1.0 / nc);
        ww = aff / nc;
      }
      const Vector diff = gram.col(static_cast<Eigen::Index>(i)) - gram.col(static_cast<Eigen::Index>(j));
      s_b += 0.5 * wb * diff * diff.transpose();
      s_w += 0.5 * ww * diff * diff.transpose();
    }
  }
  s_w.diagonal().array() += beta;

  Eigen::EigenSolver<Matrix> solver(s_w.fullPivLu().solve(s_b), false);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) values.push_back(solver.eigenvalues()[i].real());
  std::sort(values.begin(), values.end(), std::greater<>());
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector covariance_spectrum(const Matrix& x) {
  const Matrix centred = x.rowwise() - x.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centred);
  Vector s = svd.singularValues();
  return s.cwiseProduct(s) / static_cast<double>(x.rows() - 1);
}

}  // namespace oracle
