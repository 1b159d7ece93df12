#include <doctest.h>

#include "splatplan/core.hpp"

using namespace splatplan;

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(2.0 * M_PI + 0.25) == doctest::Approx(0.25));
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w >= -M_PI);
    CHECK(w < M_PI);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-12);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-12);
  }
}

TEST_CASE("camera basis is orthonormal and matches the yaw convention") {
  Pose p;
  p.yaw = 0.3;
  p.pitch = -0.2;
  const CameraBasis b = CameraBasis::from_pose(p);
  CHECK(b.forward.norm() == doctest::Approx(1.0));
  CHECK(b.right.norm() == doctest::Approx(1.0));
  CHECK(b.down.norm() == doctest::Approx(1.0));
  CHECK(b.forward.dot(b.right) == doctest::Approx(0.0));
  CHECK(b.forward.dot(b.down) == doctest::Approx(0.0));
  CHECK(b.right.dot(b.down) == doctest::Approx(0.0));

  // yaw 0, pitch 0: forward = +x (world), right = -y? check convention:
  const CameraBasis b0 = CameraBasis::from_pose(Pose{});
  CHECK(b0.forward.isApprox(Vec3(1, 0, 0)));
  CHECK(b0.right.isApprox(Vec3(0, -1, 0)));
  CHECK(b0.down.isApprox(Vec3(0, 0, -1)));
}

TEST_CASE("Rng is deterministic and roughly uniform") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));

  Rng s(9);
  for (int i = 0; i < 1000; ++i) {
    const int v = s.uniform_int(13);
    CHECK(v >= 0);
    CHECK(v < 13);
  }
}

TEST_CASE("AABB intersection and containment") {
  AABB a{Vec3(0, 0, 0), Vec3(2, 2, 2)};
  AABB b{Vec3(1, 1, 1), Vec3(3, 3, 3)};
  const AABB i = a.intersect(b);
  CHECK(i.lo.isApprox(Vec3(1, 1, 1)));
  CHECK(i.hi.isApprox(Vec3(2, 2, 2)));
  CHECK_FALSE(i.empty());
  CHECK(a.contains(Vec3(1, 1, 1)));
  CHECK_FALSE(a.contains(Vec3(2.1, 0, 0)));

  AABB c{Vec3(5, 5, 5), Vec3(6, 6, 6)};
  CHECK(a.intersect(c).empty());
}
