#include "sfb/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sfb/mathutil.hpp"
#include "sfb/rng.hpp"

namespace sfb::robust {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid) - 1, v.end());
  return 0.5 * (hi + v[mid - 1]);
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments subset_moments(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  const int d = static_cast<int>(x.cols());
  const int h = static_cast<int>(idx.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int i : idx) mean += x.row(i).transpose();
  mean /= h;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int i : idx) {
    Eigen::VectorXd c = x.row(i).transpose() - mean;
    cov += c * c.transpose();
  }
  cov /= std::max(h - 1, 1);
  return {std::move(mean), std::move(cov)};
}

// Returns log det; regularizes in place if needed.
double safe_llt(Eigen::MatrixXd& cov, Eigen::LLT<Eigen::MatrixXd>& llt) {
  const int d = static_cast<int>(cov.rows());
  double ridge = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::MatrixXd work = cov;
    if (ridge > 0.0) work.diagonal().array() += ridge;
    llt.compute(work);
    if (llt.info() == Eigen::Success) {
      double logdet = 0.0;
      for (int k = 0; k < d; ++k) logdet += 2.0 * std::log(llt.matrixL()(k, k));
      cov = work;
      return logdet;
    }
    double base = std::max(cov.trace() / d, 1e-300);
    ridge = (ridge == 0.0) ? 1e-12 * base : ridge * 100.0;
  }
  throw std::runtime_error("reweighted_mcd: covariance is irreparably singular");
}

void mahalanobis2(const Eigen::MatrixXd& x, const Eigen::VectorXd& center,
                  const Eigen::LLT<Eigen::MatrixXd>& llt, std::vector<double>& out) {
  const int n = static_cast<int>(x.rows());
  out.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd c = x.row(i).transpose() - center;
    Eigen::VectorXd s = llt.matrixL().solve(c);
    out[static_cast<size_t>(i)] = s.squaredNorm();
  }
}

std::vector<int> smallest_h(const std::vector<double>& score, int h) {
  std::vector<int> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return score[static_cast<size_t>(a)] < score[static_cast<size_t>(b)];
  });
  order.resize(static_cast<size_t>(h));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

McdEstimate reweighted_mcd(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 2 * d + 2)
    throw std::runtime_error("reweighted_mcd: too few observations for dimension");
  const int h = (n + d + 1) / 2;

  // Robust coordinatewise standardization used by the starts.
  Eigen::VectorXd med(d), madv(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> col(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = x(i, j);
    med(j) = median_of(col);
    for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = std::abs(x(i, j) - med(j));
    double m = 1.4826 * median_of(col);
    madv(j) = m > 0.0 ? m : 1e-8 * (1.0 + std::abs(med(j)));
  }

  std::vector<std::vector<int>> starts;
  {
    std::vector<double> score(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        double z = (x(i, j) - med(j)) / madv(j);
        s += z * z;
      }
      score[static_cast<size_t>(i)] = s;
    }
    starts.push_back(smallest_h(score, h));
  }
  {
    Moments mo = subset_moments(x, [&] {
      std::vector<int> all(static_cast<size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      return all;
    }());
    Eigen::LLT<Eigen::MatrixXd> llt;
    safe_llt(mo.cov, llt);
    std::vector<double> score;
    mahalanobis2(x, mo.mean, llt, score);
    starts.push_back(smallest_h(score, h));
  }
  {
    rng::Engine gen = rng::make_engine(0x5eed11cdULL);
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<int> all(static_cast<size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      rng::shuffle(all, gen);
      all.resize(static_cast<size_t>(std::max(d + 1, h / 2)));
      // Grow the random seed subset to h via one distance step.
      Moments mo = subset_moments(x, all);
      Eigen::LLT<Eigen::MatrixXd> llt;
      safe_llt(mo.cov, llt);
      std::vector<double> score;
      mahalanobis2(x, mo.mean, llt, score);
      starts.push_back(smallest_h(score, h));
    }
  }

  double best_logdet = std::numeric_limits<double>::infinity();
  std::vector<int> best_subset;
  Moments best_mo;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (auto subset : starts) {
    double logdet = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      Moments mo = subset_moments(x, subset);
      logdet = safe_llt(mo.cov, llt);
      std::vector<double> score;
      mahalanobis2(x, mo.mean, llt, score);
      std::vector<int> next = smallest_h(score, h);
      if (next == subset) {
        subset = std::move(next);
        break;
      }
      subset = std::move(next);
    }
    Moments mo = subset_moments(x, subset);
    logdet = safe_llt(mo.cov, llt);
    if (logdet < best_logdet) {
      best_logdet = logdet;
      best_subset = subset;
      best_mo = mo;
    }
  }

  // Consistency factor for the raw h-subset estimate.
  const double alpha = static_cast<double>(h) / n;
  const double q_alpha = chi2_quantile(alpha, d);
  const double c_raw = alpha / std::max(chi2_cdf(q_alpha, d + 2), 1e-12);
  Eigen::MatrixXd raw_cov = best_mo.cov * c_raw;
  double dummy = safe_llt(raw_cov, llt);
  (void)dummy;
  std::vector<double> rd2_raw;
  mahalanobis2(x, best_mo.mean, llt, rd2_raw);

  // One reweighting step at the 0.975 chi-square cutoff.
  const double q975 = chi2_quantile(0.975, d);
  std::vector<int> kept;
  for (int i = 0; i < n; ++i)
    if (rd2_raw[static_cast<size_t>(i)] <= q975) kept.push_back(i);
  if (static_cast<int>(kept.size()) < d + 1) kept = best_subset;
  Moments rw = subset_moments(x, kept);
  const double c_rw = 0.975 / std::max(chi2_cdf(q975, d + 2), 1e-12);
  rw.cov *= c_rw;

  McdEstimate est;
  est.center = rw.mean;
  double dummy2 = safe_llt(rw.cov, llt);
  (void)dummy2;
  est.scatter = rw.cov;
  mahalanobis2(x, rw.mean, llt, est.rd2);
  return est;
}

}  // namespace sfb::robust
