#include "announcer/events.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace announcer;

namespace {

WorldState quiet_world(int n) {
  WorldConfig config = default_world_config();
  config.obstacles.clear();
  config.avatar_count = n;
  auto world = spawn_world(config);
  // Spread avatars on a coarse lattice so no cell holds a gathering.
  for (int k = 0; k < n; ++k) {
    auto& a = world.avatars[static_cast<std::size_t>(k)];
    a.position = Eigen::Vector3d(5.0 + 25.0 * (k % 8), 5.0 + 25.0 * (k / 8), 0.0);
    a.behavior = phase::Wait{5.0};
    a.metrics = ActionSample{};
  }
  return world;
}

}  // namespace

TEST_SUITE("events") {

TEST_CASE("importance is a weighted sum") {
  ImportanceWeights w;
  w[Channel::SpokenWords] = 2.0;
  ActionSample s;
  CHECK(importance(s, w) == 0.0);
  s.spoken_words = 3.0;
  CHECK(importance(s, w) == 6.0);

  const auto d = ImportanceWeights::defaults();
  ActionSample x{4.0, 0.5, 7.0, 1.0, 3.0, 10.0};
  ActionSample twice{8.0, 1.0, 14.0, 2.0, 6.0, 10.0};
  CHECK(importance(twice, d) == doctest::Approx(2.0 * importance(x, d)));
  CHECK(importance(x, d) == doctest::Approx(0.1 * 4 + 0.2 * 0.5 + 0.5 * 7 + 2.0 * 1 + 2.0 * 3));
}

TEST_CASE("weights must be non-negative with one positive") {
  ImportanceWeights w;
  CHECK_THROWS(validate(w));
  w[Channel::MoveSpeed] = -1.0;
  w[Channel::VoxelCount] = 1.0;
  CHECK_THROWS(validate(w));
  CHECK_NOTHROW(validate(ImportanceWeights::defaults()));
}

TEST_CASE("dynamic threshold values and identity") {
  // Independent oracle: 1 - exp(ln f / N) = 0.0669670084...
  CHECK(dynamic_threshold(10, 0.5) == doctest::Approx(0.066967008463193).epsilon(1e-12));
  CHECK(std::abs(dynamic_threshold(10, 0.5) - 0.0670) <= 0.002);
  CHECK(dynamic_threshold(1, 0.5) == doctest::Approx(0.5));
  CHECK(dynamic_threshold(7, 1.0) == 0.0);
  CHECK_THROWS_AS(dynamic_threshold(0, 0.5), std::domain_error);
  for (int n = 1; n <= 1000; n += 37) {
    for (int k = 1; k <= 10; ++k) {
      const double f = k / 10.0;
      CHECK(std::abs(std::pow(1.0 - dynamic_threshold(n, f), n) - f) <= 1e-12 * f);
    }
  }
}

TEST_CASE("dynamic threshold decreases in N and f") {
  for (double f : {0.1, 0.3, 0.5, 0.9}) {
    for (int n = 1; n < 200; ++n) CHECK(dynamic_threshold(n + 1, f) < dynamic_threshold(n, f));
  }
  for (int n : {1, 5, 50}) {
    for (int k = 1; k < 10; ++k) CHECK(dynamic_threshold(n, (k + 1) / 10.0) < dynamic_threshold(n, k / 10.0));
  }
}

TEST_CASE("normal quantile matches known values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-12));
  CHECK(std::isinf(normal_quantile(1.0)));
  for (double p = 0.001; p < 1.0; p += 0.01) {
    const double x = normal_quantile(p);
    CHECK(0.5 * std::erfc(-x / std::sqrt(2.0)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("cutoff leaves one avatar above it with probability f") {
  const ImportanceModel model{2.0, 3.0};
  for (double f : {0.1, 0.5, 0.9}) {
    const auto s = ThresholdState::make(f, 10, model);
    const double above = 1.0 - 0.5 * std::erfc(-(s.cutoff - model.mu) / model.sigma / std::sqrt(2.0));
    CHECK(1.0 - std::pow(1.0 - above, 10) == doctest::Approx(f).epsilon(1e-9));
  }
  CHECK(ThresholdState::make(0.5, 10, model).i == doctest::Approx(dynamic_threshold(10, 0.5)));
  CHECK(std::isinf(ThresholdState::make(1.0, 10, model).cutoff));
}

TEST_CASE("Monte Carlo hit rate") {
  CHECK(std::abs(empirical_hit_rate(10, 0.5, 100000, 3) - 0.5) <= 0.02);
  CHECK(std::abs(empirical_hit_rate(1, 0.5, 100000, 4) - 0.5) <= 0.02);
  CHECK(empirical_hit_rate(25, 1.0, 1000, 5) == 1.0);
}

TEST_CASE("calibration") {
  std::vector<double> ones(50, 1.0);
  const auto flat = calibrate_model(ones);
  CHECK(flat.mu == 1.0);
  CHECK(flat.sigma == 1e-6);
  const auto prior = calibrate_model(std::vector<double>{}, 600, {0.0, 1.0});
  CHECK(prior.mu == 0.0);
  CHECK(prior.sigma == 1.0);
  CHECK(calibrate_model(std::vector<double>{3.0}).sigma == 1.0);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(5.0, 2.0);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = n(rng);
  const auto m = calibrate_model(draws, draws.size());
  CHECK(std::abs(m.mu - 5.0) <= 0.1);
  CHECK(std::abs(m.sigma - 2.0) <= 0.1);

  // Only the trailing window counts.
  std::vector<double> shifted(1000, 100.0);
  shifted.insert(shifted.end(), 600, 7.0);
  CHECK(calibrate_model(shifted).mu == 7.0);
}

TEST_CASE("global detection") {
  DensityMap map;
  map.nx = 4;
  map.ny = 2;
  map.cell_size = 10.0;
  map.counts = {0, 0, 4, 0, 0, 0, 0, 0};
  auto g = detect_global(map, 4, 1.5, 3.0);
  REQUIRE(g);
  CHECK(g->kind == EventKind::Global);
  CHECK(g->subjects.empty());
  CHECK(g->region->center.isApprox(Eigen::Vector2d(25.0, 5.0)));
  CHECK(g->score == 6.0);
  map.counts = {3, 3, 3, 0, 0, 0, 0, 3};
  CHECK_FALSE(detect_global(map, 4, 1.0, 0.0));
  map.counts = {0, 5, 0, 6, 6, 0, 0, 0};
  CHECK(detect_global(map, 4, 1.0, 0.0)->region->center.isApprox(map.cell_center(3)));
}

TEST_CASE("fetch elects the best candidate") {
  auto world = quiet_world(10);
  const ThresholdState state = ThresholdState::make(0.5, 10, {0.0, 1.0});
  EventConfig cfg;
  cfg.weights = ImportanceWeights{};
  cfg.weights[Channel::SpokenWords] = 1.0;
  CHECK_FALSE(fetch_events(world, state, cfg, 10.0));

  world.avatars[3].metrics.spoken_words = 50.0;
  auto e = fetch_events(world, state, cfg, 10.0);
  REQUIRE(e);
  CHECK(e->kind == EventKind::LocalSingle);
  CHECK(e->subjects == std::vector<int>{3});
  CHECK(e->score == 50.0);

  // Equal scores resolve to the lowest id.
  world.avatars[1].metrics.spoken_words = 50.0;
  CHECK(fetch_events(world, state, cfg, 10.0)->subjects == std::vector<int>{1});
}

TEST_CASE("co-conversing avatars above the cutoff form one multi-subject event") {
  auto world = quiet_world(10);
  world.avatars[4].position = Eigen::Vector3d(60.0, 60.0, 0.0);
  world.avatars[5].position = Eigen::Vector3d(61.2, 60.0, 0.0);
  world.avatars[4].behavior = phase::Converse{{5}, 8.0};
  world.avatars[5].behavior = phase::Converse{{4}, 8.0};
  world.avatars[4].metrics.spoken_words = 20.0;
  world.avatars[5].metrics.spoken_words = 24.0;
  EventConfig cfg;
  cfg.weights = ImportanceWeights{};
  cfg.weights[Channel::SpokenWords] = 1.0;
  const auto e = fetch_events(world, ThresholdState::make(0.5, 10, {0.0, 1.0}), cfg, 1.0);
  REQUIRE(e);
  CHECK(e->kind == EventKind::LocalMulti);
  CHECK(e->subjects == std::vector<int>{4, 5});
  CHECK(e->score == 24.0);

  // Beyond the grouping radius they stay separate.
  world.avatars[5].position = Eigen::Vector3d(70.0, 60.0, 0.0);
  const auto split = fetch_events(world, ThresholdState::make(0.5, 10, {0.0, 1.0}), cfg, 1.0);
  CHECK(split->kind == EventKind::LocalSingle);
  CHECK(split->subjects == std::vector<int>{5});
}

TEST_CASE("gatherings compete with local candidates") {
  auto world = quiet_world(10);
  for (int k = 0; k < 4; ++k) world.avatars[static_cast<std::size_t>(k)].position = Eigen::Vector3d(101.0 + k, 101.0, 0.0);
  EventConfig cfg;
  world.avatars[7].metrics.spoken_words = 10.0;  // default weight 0.5 -> 5
  const auto state = ThresholdState::make(0.5, 10, {0.0, 1.0});
  FetchOptions opts;
  opts.global_coefficient = 2.0;  // 8 beats 5
  CHECK(fetch_events(world, state, cfg, 0.0, opts)->kind == EventKind::Global);
  opts.global_coefficient = 1.0;  // 4 loses
  CHECK(fetch_events(world, state, cfg, 0.0, opts)->subjects == std::vector<int>{7});
}

TEST_CASE("scaling all weights keeps the elected event") {
  WorldConfig config = default_world_config();
  auto world = spawn_world(config);
  for (int t = 0; t < 200; ++t) advance(world, 0.05);
  EventConfig cfg;
  const auto state = ThresholdState::make(0.5, config.avatar_count, {0.0, 1.0});
  const auto base = fetch_events(world, state, cfg, world.time, {1.0, true});
  for (double c : {0.5, 3.0, 10.0}) {
    EventConfig scaled = cfg;
    scaled.weights.w *= c;
    const auto e = fetch_events(world, state, scaled, world.time, {c, true});
    REQUIRE(e);
    CHECK(e->subjects == base->subjects);
    CHECK(e->kind == base->kind);
    CHECK(e->score == doctest::Approx(c * base->score));
  }
  CHECK(fetch_events(world, state, cfg, world.time, {1.0, true})->subjects == base->subjects);
}

TEST_CASE("stationary election rate converges to f") {
  // Synthetic stationary population: one channel drawn from a normal law each cycle.
  for (double f : {0.2, 0.5, 0.8}) {
    auto world = quiet_world(12);
    EventConfig cfg;
    cfg.weights = ImportanceWeights{};
    cfg.weights[Channel::SpokenWords] = 1.0;
    cfg.gathering_threshold = 1000;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> draw(40.0, 6.0);
    std::vector<double> history;
    int hits = 0;
    const int cycles = 10000;
    for (int c = 0; c < cycles; ++c) {
      for (auto& a : world.avatars) a.metrics.spoken_words = std::max(0.0, draw(rng));
      for (const auto& a : world.avatars) history.push_back(importance(a.metrics, cfg.weights));
      const auto model = calibrate_model(history, 600);
      hits += fetch_events(world, ThresholdState::make(f, 12, model), cfg, c) ? 1 : 0;
    }
    INFO("f = " << f);
    CHECK(std::abs(static_cast<double>(hits) / cycles - f) <= 0.05);
  }
}

}
