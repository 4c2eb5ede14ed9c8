#include <random>

#include <gtest/gtest.h>

#include "optrec/experiments.hpp"
#include "optrec/gram.hpp"
#include "optrec/parallel.hpp"
#include "optrec/rkhs.hpp"

namespace optrec {
namespace {

std::vector<Functional> mixed_basis(int n, int dim) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Functional> basis;
  for (int i = 0; i < n; ++i) {
    const Point x = dim == 1 ? Point(u(rng)) : Point(u(rng), u(rng));
    basis.push_back(Functional::single(i % 2 ? OperatorTag::neg_laplacian() : OperatorTag::identity(), x));
  }
  Functional comp;
  for (int j = 0; j < 7; ++j) {
    const Point x = dim == 1 ? Point(0.1 * j) : Point(0.1 * j, 0.5);
    comp.terms.push_back({{OperatorTag::gradient(0), x, 0}, 0.3 + j});
  }
  basis.push_back(comp);
  return basis;
}

class SerialVsParallel : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { set_threads(GetParam()); }
  void TearDown() override { set_threads(1); }
};

TEST_P(SerialVsParallel, GramEntriesBitIdentical) {
  for (int dim : {1, 2}) {
    const KernelSpec spec{KernelFamily::Gaussian, 0.3, 1.0, dim};
    const auto basis = mixed_basis(60, dim);
    const Eigen::MatrixXd s = gram_entries(spec, basis, Execution::Serial);
    const Eigen::MatrixXd p = gram_entries(spec, basis, Execution::Parallel);
    EXPECT_EQ(s, p);
    EXPECT_EQ(cross_gram(spec, basis, basis, Execution::Serial), cross_gram(spec, basis, basis, Execution::Parallel));
  }
}

TEST_P(SerialVsParallel, EvalManyBitIdentical) {
  const KernelSpec spec{KernelFamily::InverseMultiquadric, 0.2, 1.0, 2};
  const auto basis = mixed_basis(40, 2);
  Eigen::VectorXd coeffs = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(basis.size()), -1.0, 1.0);
  RkhsFunction fn{basis, coeffs, spec};
  std::vector<Point> xs;
  for (int i = 0; i < 400; ++i) xs.emplace_back(0.0025 * i, 1.0 - 0.0025 * i);
  for (const auto& op : {OperatorTag::identity(), OperatorTag::neg_laplacian(), OperatorTag::gradient(1)}) {
    EXPECT_EQ(rkhs_eval_many(fn, op, xs, Execution::Serial), rkhs_eval_many(fn, op, xs, Execution::Parallel));
  }
}

TEST_P(SerialVsParallel, StudyCsvBitIdentical) {
  StudySpec spec;
  spec.problem_case = battery_case("cubic_dirichlet_1d");
  spec.kernel = KernelSpec{KernelFamily::Gaussian, 0.2, 1.0, 1};
  spec.sweep = {5, 10, 20};
  spec.exec = Execution::Serial;
  const std::string serial = to_csv(study_vary_N(spec));
  spec.exec = Execution::Parallel;
  EXPECT_EQ(serial, to_csv(study_vary_N(spec)));
}

INSTANTIATE_TEST_SUITE_P(Threads, SerialVsParallel, ::testing::Values(1, 2, 4));

TEST(Threads, SetAndQuery) {
  set_threads(3);
  EXPECT_EQ(max_threads(), 3);
  set_threads(1);
  EXPECT_EQ(max_threads(), 1);
}

}  // namespace
}  // namespace optrec
