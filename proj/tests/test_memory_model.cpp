#include <doctest.h>

#include <cmath>

#include "purisim/memory_model.h"

using namespace purisim;

TEST_CASE("exponential decay") {
  const auto emm = MemoryModel::exponential(40.0);
  CHECK(*decayed_fidelity(emm, 0.99, 0) == 0.99);
  CHECK(*decayed_fidelity(emm, 0.99, 40) ==
        doctest::Approx(0.5222307864668673).epsilon(1e-14));  // 0.25 + 0.74 / e
  CHECK(*decayed_fidelity(emm, 0.99, 100000) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("linear decay") {
  const auto lmm = MemoryModel::linear(100.0);
  CHECK(*decayed_fidelity(lmm, 0.99, 50) == doctest::Approx(0.745).epsilon(1e-14));
  CHECK(*decayed_fidelity(lmm, 0.99, 200) == 0.5);
  CHECK(*decayed_fidelity(lmm, 0.45, 10) == 0.45);
}

TEST_CASE("constant model and lifetime") {
  CHECK(*decayed_fidelity(MemoryModel::constant(), 0.99, 1000000) == 0.99);
  const auto cmm = MemoryModel::constant(100);
  CHECK(is_expired(cmm, 101));
  CHECK_FALSE(is_expired(cmm, 100));
  CHECK_FALSE(decayed_fidelity(cmm, 0.99, 101).has_value());
  CHECK(*decayed_fidelity(cmm, 0.99, 100) == 0.99);
  CHECK_FALSE(is_expired(MemoryModel::exponential(10.0), 1000000));
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(MemoryModel::exponential(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MemoryModel::linear(-1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MemoryModel::constant(-1).validate(), std::invalid_argument);
  CHECK_THROWS(decayed_fidelity(MemoryModel::constant(), 0.9, -1));
}

TEST_CASE("names") {
  CHECK(parse_memory_kind("emm") == MemoryModel::Kind::kExponential);
  CHECK(parse_memory_kind("lmm") == MemoryModel::Kind::kLinear);
  CHECK(parse_memory_kind("cmm") == MemoryModel::Kind::kConstant);
  CHECK(to_string(MemoryModel::Kind::kLinear) == "lmm");
  CHECK_THROWS(parse_memory_kind("foo"));
}

// ---- properties ------------------------------------------------------------

TEST_CASE("exponential decay composes over split intervals") {
  const auto emm = MemoryModel::exponential(37.5);
  for (Timestep a = 0; a < 60; a += 7) {
    for (Timestep b = 0; b < 60; b += 5) {
      const double direct = *decayed_fidelity(emm, 0.97, a + b);
      const double staged = *decayed_fidelity(emm, *decayed_fidelity(emm, 0.97, a), b);
      CHECK(staged == doctest::Approx(direct).epsilon(1e-13));
    }
  }
}

TEST_CASE("linear decay matches its one-step recursion") {
  const double t_coh = 80.0;
  const double f0 = 0.93;
  const auto lmm = MemoryModel::linear(t_coh);
  double f = f0;
  for (Timestep k = 1; k <= 200; ++k) {
    f = std::max(0.5, f - (f0 - 0.5) / t_coh);
    CHECK(*decayed_fidelity(lmm, f0, k) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("decay is monotone non-increasing in storage time") {
  for (const auto& model : {MemoryModel::exponential(25.0), MemoryModel::linear(25.0),
                            MemoryModel::constant()}) {
    for (double f0 = 0.55; f0 <= 1.0; f0 += 0.05) {
      double previous = f0;
      for (Timestep dt = 0; dt <= 300; ++dt) {
        const double f = *decayed_fidelity(model, f0, dt);
        CHECK(f <= previous + 1e-15);
        previous = f;
      }
    }
  }
}
