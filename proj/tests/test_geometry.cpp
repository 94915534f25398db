#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gslam/geometry.hpp"
#include "gslam/random.hpp"

using namespace gslam;

namespace {

Transform2 randomTransform(Rng& rng) {
  return Transform2(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                    rng.uniform(-M_PI, M_PI));
}

}  // namespace

TEST_CASE("compose identity and inverse") {
  const Transform2 t(1.3, -2.7, 0.9);
  CHECK(approxEqual(compose(Transform2(), t), t));
  CHECK(approxEqual(compose(t, Transform2()), t));

  const Transform2 id = compose(t, inverse(t));
  CHECK(std::abs(id.x) < 1e-12);
  CHECK(std::abs(id.y) < 1e-12);
  CHECK(std::abs(id.theta) < 1e-12);
}

TEST_CASE("compose rotates the second translation") {
  const Transform2 r = compose(Transform2(1, 0, M_PI / 2), Transform2(1, 0, 0));
  CHECK(r.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.theta == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("relative") {
  const Transform2 t(0.4, 2.0, -1.1);
  CHECK(approxEqual(relative(t, t), Transform2()));
  CHECK(approxEqual(relative(Transform2(), t), t));
  CHECK(approxEqual(relative(Transform2(1, 1, 0), Transform2(2, 1, 0)),
                    Transform2(1, 0, 0)));
}

TEST_CASE("compose(a, relative(a, b)) returns b") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Transform2 a = randomTransform(rng);
    const Transform2 b = randomTransform(rng);
    CHECK(approxEqual(compose(a, relative(a, b)), b, 1e-12));
  }
}

TEST_CASE("composition associativity on random triples") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Transform2 a = randomTransform(rng);
    const Transform2 b = randomTransform(rng);
    const Transform2 c = randomTransform(rng);
    CHECK(approxEqual(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9));
  }
}

TEST_CASE("theta stays normalized to (-pi, pi]") {
  Transform2 t(0, 0, 3.0);
  for (int i = 0; i < 50; ++i) {
    t = compose(t, Transform2(0.1, 0, 3.0));
    CHECK(t.theta > -M_PI);
    CHECK(t.theta <= M_PI);
  }
  CHECK(Transform2(0, 0, M_PI).theta == doctest::Approx(M_PI));
  CHECK(Transform2(0, 0, -M_PI).theta == doctest::Approx(M_PI));
  CHECK(Transform2(0, 0, 3 * M_PI).theta == doctest::Approx(M_PI));
}

TEST_CASE("covariance accepts PSD plus ridge, rejects indefinite") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(r, c) = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3d psd = a * a.transpose() + 1e-6 * Eigen::Matrix3d::Identity();
    CHECK_NOTHROW(Covariance3{psd});

    Eigen::Matrix3d indefinite = a * a.transpose();
    indefinite(0, 0) = -std::abs(indefinite(0, 0)) - 0.1;
    CHECK_THROWS_AS(Covariance3{indefinite}, std::invalid_argument);
  }
}

TEST_CASE("covariance rejects asymmetry") {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 1) = 1e-6;  // m(1,0) stays 0
  CHECK_THROWS_AS(Covariance3{m}, std::invalid_argument);
}

TEST_CASE("information matrix is the inverse for well-conditioned input") {
  const Covariance3 cov = Covariance3::diagonal(0.01, 0.02, 0.001);
  const Eigen::Matrix3d info = cov.information();
  CHECK(info(0, 0) == doctest::Approx(100.0));
  CHECK(info(1, 1) == doctest::Approx(50.0));
  CHECK(info(2, 2) == doctest::Approx(1000.0));
}
