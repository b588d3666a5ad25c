#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hierlearn/braindump.hpp"
#include "hierlearn/dataset.hpp"

using namespace hierlearn;

TEST_CASE("gen_braindump parameter validation", "[braindump]") {
  CHECK_THROWS_AS(gen_braindump(8, 2, 2, 4, 10, 1), std::invalid_argument);  // even k
  CHECK_THROWS_AS(gen_braindump(8, 2, 2, 9, 10, 1), std::invalid_argument);  // k > d
  CHECK_THROWS_AS(gen_braindump(4, 2, 5, 3, 10, 1), std::invalid_argument);  // K > d
}

TEST_CASE("weight vectors live in W_{d,k}", "[braindump]") {
  const BrainDumpModel m = gen_braindump(12, 3, 2, 5, 40, 7);
  for (const auto& level : m.weights)
    for (const SignVector& w : level) {
      CHECK(w.index.size() == 5);
      CHECK(std::is_sorted(w.index.begin(), w.index.end()));
      for (std::size_t i = 1; i < w.index.size(); ++i) CHECK(w.index[i] != w.index[i - 1]);
      for (int s : w.sign) CHECK((s == 1 || s == -1));
    }
}

TEST_CASE("fanout one gives signed circuit wires", "[braindump]") {
  const BrainDumpModel m = gen_braindump(10, 2, 2, 1, 30, 11);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(10, 1);
    for (int i = 0; i < 10; ++i) x(i, 0) = rng.sign();
    const Eigen::MatrixXd G = m.circuit_levels(x.col(0));
    const Eigen::MatrixXd y = eval_labels(m, x);
    for (int i = 1; i <= m.r; ++i)
      for (int j = 0; j < m.q_labels; ++j) {
        const SignVector& w = m.weights[i - 1][j];
        CHECK(y((i - 1) * m.q_labels + j, 0) == w.sign[0] * G(i, w.index[0]));
      }
  }
}

TEST_CASE("odd fanout never ties", "[braindump]") {
  const BrainDumpModel m = gen_braindump(9, 2, 2, 3, 50, 17);
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(9, 1);
    for (int i = 0; i < 9; ++i) x(i, 0) = rng.sign();
    const Eigen::MatrixXd G = m.circuit_levels(x.col(0));
    const Eigen::MatrixXd y = eval_labels(m, x);
    for (int i = 0; i < y.rows(); ++i) CHECK(std::abs(y(i, 0)) == 1.0);
    // the majority sum itself is odd, hence nonzero
    for (int i = 1; i <= m.r; ++i)
      for (int j = 0; j < m.q_labels; ++j) {
        const double s = m.weights[i - 1][j].dot(G.row(i).transpose());
        CHECK(std::abs(s) >= 1.0);
      }
  }
}

TEST_CASE("labels are deterministic functions of the circuit levels", "[braindump]") {
  const BrainDumpModel m = gen_braindump(16, 2, 2, 3, 200, 23);
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(16, 1);
    for (int i = 0; i < 16; ++i) x(i, 0) = rng.sign();
    // independent slow evaluator that materializes every level
    Eigen::VectorXd wires = x.col(0);
    Eigen::VectorXd expect(m.n_labels());
    for (int i = 1; i <= m.r; ++i) {
      Eigen::VectorXd next(m.d);
      for (int j = 0; j < m.d; ++j) next[j] = m.gates[i - 1][j].eval(wires);
      wires = next;
      for (int j = 0; j < m.q_labels; ++j)
        expect[(i - 1) * m.q_labels + j] = m.weights[i - 1][j].dot(wires) > 0 ? 1.0 : -1.0;
    }
    CHECK(eval_labels(m, x).col(0) == expect);
  }
}

TEST_CASE("alpha_dk closed-form values", "[braindump]") {
  CHECK(alpha_dk(1, 1) == 1.0);
  CHECK(alpha_dk(10, 3) == Catch::Approx(0.15).margin(1e-15));
  CHECK(alpha_dk(64, 5) == Catch::Approx((5.0 / 64.0) * 6.0 / 16.0).margin(1e-15));
  CHECK_THROWS_AS(alpha_dk(10, 4), std::invalid_argument);
  CHECK_THROWS_AS(alpha_dk(3, 5), std::invalid_argument);
}

TEST_CASE("central binomial asymptotics", "[braindump]") {
  for (int k = 20; k <= 60; k += 10) {
    double log_binom = 0.0;
    for (int i = 1; i <= k; ++i) log_binom += std::log((k + i) / double(i));
    const double ratio = std::sqrt(M_PI * k) * std::exp(log_binom - 2.0 * k * std::log(2.0));
    CHECK(std::abs(ratio - 1.0) <= 0.02);
  }
}

TEST_CASE("per-coordinate majority correlation matches alpha_dk", "[braindump]") {
  // E[w_j sign(<w,x>)] = alpha_{d,k} x_j, estimated by Monte Carlo
  const int d = 12, k = 3;
  const double alpha = alpha_dk(d, k);
  Rng rng(31);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.sign();
  const int j = 4;
  const long trials = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (long t = 0; t < trials; ++t) {
    const SignVector w = random_sign_vector(rng, d, k);
    double wj = 0.0;
    for (std::size_t idx = 0; idx < w.index.size(); ++idx)
      if (w.index[idx] == j) wj = w.sign[idx];
    const double v = wj * (w.dot(x) > 0 ? 1.0 : -1.0);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sumsq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - alpha * x[j]) <= 4.0 * sd);
}

TEST_CASE("reconstruction error symmetry and decay in q", "[braindump]") {
  Rng rng(37);
  Eigen::VectorXd x(24);
  for (int i = 0; i < 24; ++i) x[i] = rng.sign();

  const BrainDumpModel small = gen_braindump(24, 1, 2, 3, 500, 41);
  const BrainDumpModel large = gen_braindump(24, 1, 2, 3, 8000, 41);
  CHECK(reconstruction_error(small, 1, x) == reconstruction_error(small, 1, (-x).eval()));

  // statistically decreasing in the number of majority labels
  std::vector<double> small_errs, large_errs;
  for (int t = 0; t < 21; ++t) {
    Eigen::VectorXd xt(24);
    for (int i = 0; i < 24; ++i) xt[i] = rng.sign();
    small_errs.push_back(reconstruction_error(small, 1, xt));
    large_errs.push_back(reconstruction_error(large, 1, xt));
  }
  std::sort(small_errs.begin(), small_errs.end());
  std::sort(large_errs.begin(), large_errs.end());
  CHECK(large_errs[10] < small_errs[10]);  // medians
}

TEST_CASE("extended Chernoff sanity by Monte Carlo", "[braindump]") {
  // X in {-1,0,1}; empirical deviation frequency of (1/(q|mu|)) sum X_i from
  // mu/|mu| never exceeds 2x the bound 4 exp(-q eps^2 mu^2 / (12 P(X!=0))).
  Rng rng(43);
  const int mc_trials = 10000;
  for (const auto& [p_plus, p_minus, q] : std::vector<std::tuple<double, double, int>>{
           {0.30, 0.10, 200}, {0.25, 0.15, 500}, {0.12, 0.04, 1000}}) {
    const double mu = p_plus - p_minus;
    const double pnz = p_plus + p_minus;
    const double eps_max = std::min(p_plus, p_minus) / (2.0 * std::abs(mu));
    for (double eps : {0.5 * eps_max, eps_max}) {
      const double bound = 4.0 * std::exp(-q * eps * eps * mu * mu / (12.0 * pnz));
      long hits = 0;
      for (int t = 0; t < mc_trials; ++t) {
        long sum = 0;
        for (int i = 0; i < q; ++i) {
          const double u = rng.uniform();
          sum += u < p_plus ? 1 : (u < pnz ? -1 : 0);
        }
        const double dev = std::abs(sum / (q * std::abs(mu)) - mu / std::abs(mu));
        if (dev >= eps) ++hits;
      }
      const double freq = double(hits) / mc_trials;
      INFO("p+=" << p_plus << " p-=" << p_minus << " q=" << q << " eps=" << eps
                 << " freq=" << freq << " bound=" << bound);
      CHECK(freq <= 2.0 * bound + 2e-3);
    }
  }
}
