#include <doctest.h>

#include <cmath>
#include <random>

#include "ctxmdp/glm.hpp"
#include "ctxmdp/mdp.hpp"

using namespace ctxmdp;

TEST_CASE("logistic link values") {
  const LinkFunction link(LinkKind::logistic);
  CHECK(link(0.0) == 0.5);
  CHECK(link(1.0) == doctest::Approx(0.7310586).epsilon(1e-7));
  CHECK(link(-1.0) == doctest::Approx(0.2689414).epsilon(1e-7));
  CHECK(link(800.0) == 1.0);
  CHECK(link(-800.0) >= 0.0);
  CHECK(link(-800.0) < 1e-300);
  CHECK(link(40.0) > 1.0 - 1e-15);
  CHECK(link.lipschitz() == 0.25);
  CHECK(link.derivative(0.0) == 0.25);
}

TEST_CASE("identity link clamps predictions but not the working mean") {
  const LinkFunction link(LinkKind::identity);
  CHECK(link(0.3) == 0.3);
  CHECK(link(1.7) == 1.0);
  CHECK(link(-0.2) == 0.0);
  CHECK(link.working_mean(1.7) == 1.7);
  CHECK(link.working_derivative(5.0) == 1.0);
  CHECK(link.lipschitz() == 1.0);
  CHECK(link.slope_floor(3.0) == 1.0);
}

TEST_CASE("link names round-trip") {
  CHECK(LinkFunction::from_name("logistic").kind() == LinkKind::logistic);
  CHECK(LinkFunction::from_name("identity").kind() == LinkKind::identity);
  CHECK_THROWS_AS(LinkFunction::from_name("probit"), std::invalid_argument);
  CHECK(LinkFunction(LinkKind::identity).name() == "identity");
}

TEST_CASE("logistic symmetry, Lipschitz bound and slope floor") {
  const LinkFunction link;
  Rng rng(4);
  std::uniform_real_distribution<double> z(-20.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = z(rng), b = z(rng);
    CHECK(std::abs(link(a) + link(-a) - 1.0) <= 1e-15);
    CHECK(std::abs(link(a) - link(b)) <= link.lipschitz() * std::abs(a - b) + 1e-15);
  }
  const double bound = 2.5;
  const double floor = link.slope_floor(bound);
  std::uniform_real_distribution<double> inside(-bound, bound);
  for (int i = 0; i < 10000; ++i) CHECK(link.derivative(inside(rng)) >= floor - 1e-12);
  CHECK_THROWS_AS(link.slope_floor(-1.0), std::invalid_argument);
}

TEST_CASE("cumulant derivative is the working mean") {
  for (auto kind : {LinkKind::logistic, LinkKind::identity}) {
    const LinkFunction link(kind);
    for (double z : {-30.0, -2.0, -0.1, 0.0, 0.7, 3.0, 30.0}) {
      const double h = 1e-5;
      const double numeric = (link.cumulant(z + h) - link.cumulant(z - h)) / (2 * h);
      CHECK(numeric == doctest::Approx(link.working_mean(z)).epsilon(1e-6));
    }
  }
}

TEST_CASE("logistic templates work with float") {
  CHECK(logistic(0.0f) == 0.5f);
  CHECK(logistic_derivative(0.0f) == 0.25f);
  CHECK(LinkFunction{}(1.0f) == doctest::Approx(0.7310586f));
}

TEST_CASE("identity feature map pads, truncates and appends a bias") {
  const auto phi = FeatureMap::identity(2, 4, true);
  const Eigen::VectorXd out = phi(Eigen::Vector2d(0.3, -0.4));
  CHECK(out.size() == 4);
  CHECK(out[0] == 0.3);
  CHECK(out[1] == -0.4);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 1.0);
  CHECK(phi.norm_bound(1.0) == doctest::Approx(std::sqrt(2.0)));

  const auto trunc = FeatureMap::identity(3, 2, false);
  const Eigen::VectorXd t = trunc(Eigen::Vector3d(1, 2, 3));
  CHECK(t.size() == 2);
  CHECK(t[1] == 2.0);
  CHECK_THROWS_AS(trunc(Eigen::Vector2d(1, 2)), std::invalid_argument);
}

TEST_CASE("constant feature map ignores side information") {
  const auto c = FeatureMap::constant(3);
  CHECK(c(Eigen::Vector3d(5, 6, 7)) == Eigen::VectorXd::Ones(1));
  CHECK(c.output_dim() == 1);
  CHECK(c.norm_bound(10.0) == 1.0);
}

TEST_CASE("predictions from parameters") {
  const FeatureMaps maps{FeatureMap::identity(2, 3, true), FeatureMap::identity(2, 3, true), 1.0};
  const LinkFunction link;
  const Eigen::Vector2d x(0.5, 0.0);
  CHECK(predict_transition_score(x, Eigen::Vector3d::Zero(), maps, link) == 0.5);
  CHECK(predict_reward_mean(x, Eigen::Vector3d::Zero(), maps, link) == 0.5);
  // psi(x)^T lambda = 0.5 * 2 + 1 * -2 = -1
  CHECK(predict_reward_mean(x, Eigen::Vector3d(2, 7, -2), maps, link) ==
        doctest::Approx(0.2689414).epsilon(1e-7));
  CHECK(predict_transition_score(x, Eigen::Vector3d(0, 0, 1), maps, link) ==
        doctest::Approx(0.7310586).epsilon(1e-7));
  CHECK(predict_reward_mean(x, Eigen::Vector3d(0, 0, 0.3), maps, LinkFunction(LinkKind::identity)) ==
        doctest::Approx(0.3));
  CHECK(predict_transition_score(x, Eigen::Vector3d(0, 0, 1e6), maps, link) == 1.0);
  CHECK_THROWS_AS(predict_reward_mean(x, Eigen::Vector2d::Zero(), maps, link),
                  std::invalid_argument);

  Eigen::MatrixXd params(3, 2);
  params << 0, 2, 0, 7, 1, -2;
  const Eigen::VectorXd all = predict_all(params, maps.reward(x), link);
  CHECK(all[0] == doctest::Approx(0.7310586).epsilon(1e-7));
  CHECK(all[1] == doctest::Approx(0.2689414).epsilon(1e-7));
}

TEST_CASE("slope constants follow each family's score range") {
  const FeatureMaps maps{FeatureMap::identity(2, 3, true), FeatureMap::constant(2), 1.0};
  const LinkFunction link;
  const SlopeConstants c = slope_constants(maps, link, 2.0);
  CHECK(c.transition == doctest::Approx(logistic_derivative(2.0 * std::sqrt(2.0))));
  CHECK(c.reward == doctest::Approx(logistic_derivative(2.0)));
}

TEST_CASE("parameter table validation") {
  LayeredTopology topo({1, 2}, 2);
  ParameterTables p = ParameterTables::zeros(topo, 3, 2, 1.0);
  CHECK(p.theta.rows() == 3);
  CHECK(p.theta.cols() == topo.num_triples());
  CHECK(p.lambda.cols() == topo.num_pairs());
  CHECK_NOTHROW(p.validate(topo));
  p.lambda(0, 1) = 1.5;
  CHECK_THROWS_AS(p.validate(topo), std::invalid_argument);
}
