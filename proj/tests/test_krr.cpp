#include <doctest.h>

#include <Eigen/LU>
#include <cmath>

#include "adkrr/krr.hpp"
#include "test_util.hpp"

using namespace adkrr;

namespace {

DataSet random_instance(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  return {testutil::uniform_matrix(n, d, seed),
          testutil::gaussian_vector(n, seed + 1)};
}

}  // namespace

TEST_SUITE("krr") {

TEST_CASE("single sample closed form") {
  DataSet data{testutil::uniform_matrix(1, 2, 1), Eigen::VectorXd::Ones(1)};
  const DualEstimator est = fit_krr(data, KernelSpec::gaussian(1.0), 1.0);
  CHECK(std::abs(est.alpha[0] - 0.5) <= 1e-15);
  const Eigen::VectorXd pred = predict(est, data.inputs);
  CHECK(std::abs(pred[0] - 0.5) <= 1e-15);
}

TEST_CASE("heavy ridge shrinks predictions to zero") {
  const DataSet data = random_instance(20, 2, 7);
  const DualEstimator est = fit_krr(data, KernelSpec::gaussian(1.0), 1e8);
  const Eigen::VectorXd pred =
      predict(est, testutil::uniform_matrix(10, 2, 8));
  CHECK(pred.cwiseAbs().maxCoeff() <
        1e-6 * data.outputs.cwiseAbs().maxCoeff());
}

TEST_CASE("matches a dense lu solve") {
  const DataSet data = random_instance(20, 3, 21);
  const double lambda = 1e-3;
  for (const KernelSpec spec :
       {KernelSpec::wendland(), KernelSpec::gaussian(0.6)}) {
    const DualEstimator est = fit_krr(data, spec, lambda);
    Eigen::MatrixXd system = gram(spec, data.inputs, data.inputs);
    system.diagonal().array() += lambda * 20.0;
    const Eigen::VectorXd oracle =
        Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(data.outputs);
    CHECK(testutil::max_abs_diff(est.alpha, oracle) <=
          1e-8 * oracle.cwiseAbs().maxCoeff());

    // residual of the normal system stays small
    CHECK((system * est.alpha - data.outputs).norm() <=
          1e-8 * data.outputs.norm());

    // training predictions are the gram-vector product
    const Eigen::VectorXd pred = predict(est, data.inputs);
    const Eigen::VectorXd direct =
        gram(spec, data.inputs, data.inputs) * est.alpha;
    CHECK(testutil::max_abs_diff(pred, direct) <= 1e-10);
  }
}

TEST_CASE("interpolation limit") {
  // tight widths keep the gram matrix near identity, so lambda -> 0
  // approaches interpolation
  const DataSet data = random_instance(20, 3, 33);
  const DualEstimator est = fit_krr(data, KernelSpec::gaussian(0.5), 1e-12);
  const Eigen::VectorXd pred = predict(est, data.inputs);
  CHECK(testutil::max_abs_diff(pred, data.outputs) <=
        1e-4 * data.outputs.cwiseAbs().maxCoeff());
}

TEST_CASE("wendland far query predicts zero") {
  const DataSet data = random_instance(15, 2, 9);
  const DualEstimator est = fit_krr(data, KernelSpec::wendland(), 0.01);
  Eigen::MatrixXd far(1, 2);
  far << 5.0, 5.0;
  CHECK(predict(est, far)[0] == 0.0);
}

TEST_CASE("fit is deterministic") {
  const DataSet data = random_instance(25, 2, 41);
  const DualEstimator a = fit_krr(data, KernelSpec::gaussian(0.9), 1e-4);
  const DualEstimator b = fit_krr(data, KernelSpec::gaussian(0.9), 1e-4);
  CHECK((a.alpha.array() == b.alpha.array()).all());
}

TEST_CASE("precomputed gram path matches") {
  const DataSet data = random_instance(18, 2, 55);
  const KernelSpec spec = KernelSpec::wendland();
  const DualEstimator direct = fit_krr(data, spec, 1e-2);
  auto inputs = std::make_shared<const Eigen::MatrixXd>(data.inputs);
  const DualEstimator via_gram = fit_krr_with_gram(
      inputs, gram(spec, *inputs, *inputs), data.outputs, spec, 1e-2);
  CHECK((direct.alpha.array() == via_gram.alpha.array()).all());
}

TEST_CASE("lambda must be positive") {
  const DataSet data = random_instance(5, 2, 3);
  CHECK_THROWS_AS(fit_krr(data, KernelSpec::wendland(), 0.0), DomainError);
  CHECK_THROWS_AS(fit_krr(data, KernelSpec::wendland(), -1.0), DomainError);
}

TEST_CASE("predict rejects dimension mismatch") {
  const DataSet data = random_instance(5, 2, 3);
  const DualEstimator est = fit_krr(data, KernelSpec::wendland(), 0.1);
  CHECK_THROWS_AS(predict(est, testutil::uniform_matrix(4, 3, 1)), ShapeError);
}

TEST_CASE("truncate") {
  Eigen::VectorXd v(3);
  v << 1.5, -2.0, 0.3;
  const Eigen::VectorXd t = truncate(v, 1.0);
  CHECK(t[0] == 1.0);
  CHECK(t[1] == -1.0);
  CHECK(t[2] == 0.3);

  // identity when nothing exceeds the bound
  CHECK((truncate(v, 3.0).array() == v.array()).all());

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(truncate(zero, 0.5)[0] == 0.0);

  // idempotent
  CHECK((truncate(t, 1.0).array() == t.array()).all());

  CHECK((truncate(v, 1.0).cwiseAbs().array() <= 1.0).all());
  CHECK_THROWS_AS(truncate(v, 0.0), DomainError);
  CHECK_THROWS_AS(truncate(v, -2.0), DomainError);
}

}  // TEST_SUITE
