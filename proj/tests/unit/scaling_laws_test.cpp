/* Copyright 2026 The carbonlaw Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <cmath>
#include <vector>

#include "carbonlaw/scaling_laws.hpp"

using namespace carbonlaw;

TEST_CASE("architecture from hidden size") {
  const ModelPoint a = derive_architecture(12288, 2048);
  CHECK(a.d_ff == 49152);
  CHECK(a.n_layers == 469);
  CHECK(a.n_experts == 8);

  const ModelPoint small = derive_architecture(64, 2048);
  CHECK(small.n_layers == 9);
  CHECK(small.n_experts == 1);

  CHECK_THROWS_AS(derive_architecture(100, 2048), std::invalid_argument);
  CHECK_THROWS_AS(derive_architecture(0, 2048), std::invalid_argument);
}

TEST_CASE("parameter counts") {
  const ModelPoint p = make_point(6144, 2048);
  const Count d = 6144;
  CHECK(p.n_layers == 279);
  CHECK(p.n_experts == 4);
  CHECK(p.n_params == 279 * (4 * d * d + 4 * 2 * d * (4 * d)));
  CHECK(p.n_params_active == 279 * (4 * d * d + 2 * 2 * d * (4 * d)));
  CHECK(p.n_params == 379148304384ull);
  CHECK(p.n_params_active == 210637946880ull);
}

TEST_CASE("single expert models are fully active") {
  const ModelPoint p = make_point(64, 2048);
  CHECK(p.n_params == p.n_params_active);
  CHECK(p.n_params == 442368);
}

TEST_CASE("training requirements") {
  const ModelPoint p = make_point(10816, 2048);
  CHECK(p.dataset_tokens == 20 * p.n_params_active);
  CHECK(p.compute == doctest::Approx(1.1921396975584677e26).epsilon(1e-12));
  CHECK(p.predicted_loss == doctest::Approx(1.8014003221306987).epsilon(1e-12));
  CHECK(p.critical_batch_tokens == 3635200);
  CHECK(p.critical_batch_tokens % p.seq_len == 0);
}

TEST_CASE("critical batch at the reference compute") {
  CHECK(critical_batch_tokens(5.88e23, 2048) == 1499136);
  ScalingConfig aggressive;
  aggressive.batch_exponent = 0.33;
  CHECK(critical_batch_tokens(5.88e23, 2048, aggressive) == 1499136);
  // Larger exponent grows faster above the reference.
  CHECK(critical_batch_tokens(5.88e26, 2048, aggressive) > critical_batch_tokens(5.88e26, 2048));
}

TEST_CASE("doubling compute scales the batch by 2^beta") {
  for (double c : {1e22, 5.88e23, 1e26, 1e29}) {
    const double b1 = static_cast<double>(critical_batch_tokens(c, 2048));
    const double b2 = static_cast<double>(critical_batch_tokens(2 * c, 2048));
    CHECK(std::abs(b2 - b1 * std::pow(2.0, 1.0 / 6.0)) <= 2048.0 * (1 + std::pow(2.0, 1.0 / 6.0)));
  }
}

TEST_CASE("loss falls and compute rises along a sweep") {
  const std::vector<Count> ds = geometric_d_models(1024, 65536, 12);
  const auto pts = sweep(ds, 2048);
  REQUIRE(pts.size() == ds.size());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].compute > pts[i - 1].compute);
    CHECK(pts[i].predicted_loss < pts[i - 1].predicted_loss);
    CHECK(pts[i].n_params > pts[i - 1].n_params);
  }
}

TEST_CASE("sweep input validation") {
  const std::vector<Count> empty;
  CHECK_THROWS_AS(sweep(empty, 2048), std::invalid_argument);
  const std::vector<Count> unsorted{2048, 1024};
  CHECK_THROWS_AS(sweep(unsorted, 2048), std::invalid_argument);
  const std::vector<Count> misaligned{1000};
  CHECK_THROWS_WITH_AS(sweep(misaligned, 2048), doctest::Contains("1000"), std::invalid_argument);
  const std::vector<Count> one{6144};
  CHECK(sweep(one, 2048).front().seq_len == 2048);
}

TEST_CASE("parameter count overflow is detected") {
  CHECK_THROWS_AS(make_point(Count{1} << 40, 2048), OverflowError);
}

TEST_CASE("geometric hidden sizes") {
  const auto ds = geometric_d_models(4096, 65536, 5);
  CHECK(ds == std::vector<Count>{4096, 8192, 16384, 32768, 65536});
  for (Count d : geometric_d_models(1000, 90000, 9)) CHECK(d % kDModelAlignment == 0);
}

TEST_CASE("hidden size for an active parameter target") {
  const Count d = d_model_for_active_params(1e12);
  CHECK(d == 10816);
  const double n = static_cast<double>(make_point(d, 2048).n_params_active);
  const double below = static_cast<double>(make_point(d - 64, 2048).n_params_active);
  const double above = static_cast<double>(make_point(d + 64, 2048).n_params_active);
  CHECK(std::abs(std::log(n / 1e12)) <= std::abs(std::log(below / 1e12)));
  CHECK(std::abs(std::log(n / 1e12)) <= std::abs(std::log(above / 1e12)));
}
