#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <beamlearn/learner.hpp>
#include <beamlearn/optimizer.hpp>
#include <beamlearn/task.hpp>

using namespace beamlearn;

TEST_CASE("gradient descent scales steps by the inverse root of the round") {
  OnlineOptimizer opt = OnlineOptimizer::ogd(2.0);
  Parameters theta = {0.0, 1.0};
  opt.update(theta, {1.0, -1.0});
  REQUIRE(theta[0] == -2.0);
  REQUIRE(theta[1] == 3.0);
  opt.update(theta, {1.0, 0.0});
  REQUIRE(theta[0] == Catch::Approx(-2.0 - 2.0 / std::sqrt(2.0)));
  REQUIRE(theta[1] == 3.0);
  REQUIRE_THROWS_AS(OnlineOptimizer::ogd(0.0), ConfigError);
}

TEST_CASE("adam first step moves by the step size against the gradient sign") {
  OnlineOptimizer opt = OnlineOptimizer::adam(0.1);
  Parameters theta = {0.0, 0.0};
  opt.update(theta, {3.0, -0.5});
  REQUIRE(theta[0] == Catch::Approx(-0.1).epsilon(1e-6));
  REQUIRE(theta[1] == Catch::Approx(0.1).epsilon(1e-6));
  REQUIRE_THROWS_AS(OnlineOptimizer::adam(0.1, 1.0), ConfigError);
  Parameters wrong = {0.0};
  REQUIRE_THROWS_AS(opt.update(wrong, {1.0, 1.0}), PreconditionError);
}

TEST_CASE("deviation margin matches its closed form") {
  REQUIRE(azuma_eta(1.0, 0.05, 100) == Catch::Approx(0.24477468306808164).epsilon(1e-12));
  REQUIRE(azuma_eta(0.0, 0.5, 10) == 0.0);
  REQUIRE(azuma_eta(2.0, 0.1, 50) ==
          Catch::Approx(2.0 * std::sqrt(2.0 * std::log(10.0) / 50.0)));
  REQUIRE_THROWS_AS(azuma_eta(1.0, 0.0, 10), ConfigError);
  REQUIRE_THROWS_AS(azuma_eta(1.0, 1.5, 10), ConfigError);
  REQUIRE_THROWS_AS(azuma_eta(1.0, 0.5, 0), ConfigError);
  REQUIRE_THROWS_AS(azuma_eta(-1.0, 0.5, 10), ConfigError);
}

TEST_CASE("intervention bound combines its three terms") {
  REQUIRE(stopreset_bound(0.5, 0.8, 2.0, 0.1) == Catch::Approx(0.5 + 0.4 + 0.2));
  REQUIRE(stopreset_bound(1.0, 1.0, 5.0, 0.0) == 1.0);
}

TEST_CASE("mixture roll-in purity decays geometrically with depth") {
  REQUIRE(interp_alpha_analytic(0.5, 3) == 0.25);
  REQUIRE(interp_alpha_analytic(0.5, 1) == 1.0);
  REQUIRE(interp_alpha_analytic(0.0, 7) == 1.0);
  REQUIRE(interp_alpha_analytic(1.0, 2) == 0.0);
  REQUIRE_THROWS_AS(interp_alpha_analytic(1.5, 2), ConfigError);
  REQUIRE_THROWS_AS(interp_alpha_analytic(0.5, 0), ConfigError);
}

TEST_CASE("annealing penalty is the amortized burn-in, capped at u") {
  REQUIRE(interp_schedule_penalty(2.0, 50, 100) == 1.0);
  REQUIRE(interp_schedule_penalty(2.0, 300, 100) == 2.0);
  REQUIRE(interp_schedule_penalty(0.0, 50, 100) == 0.0);
  REQUIRE_THROWS_AS(interp_schedule_penalty(-1.0, 1, 1), ConfigError);
  REQUIRE_THROWS_AS(interp_schedule_penalty(1.0, 1, 0), ConfigError);
}

TEST_CASE("per-round loss ceilings follow the closed forms") {
  const int d = 3, n = 5, k = 2;
  const double r = 2.0, c = 10.0;
  REQUIRE(loss_bound_u("perceptron_first", d, n, r, c, k) == 60.0);
  REQUIRE(loss_bound_u("perceptron_last", d, n, r, c, k) == 60.0);
  REQUIRE(loss_bound_u("margin_last", d, n, r, c, k) == 63.0);
  REQUIRE(loss_bound_u("cs_margin_last", d, n, r, c, k) == Catch::Approx(126.0));
  REQUIRE(loss_bound_u("upper_bound", d, n, r, c, k) == Catch::Approx(378.0));
  REQUIRE(loss_bound_u("log_beam", d, n, r, c, k) ==
          Catch::Approx((2 * c + std::log(3.0)) * d));
  REQUIRE(loss_bound_u("log_neighbors", d, n, r, c, k) ==
          Catch::Approx((2 * c + std::log(5.0)) * d));
  REQUIRE(loss_bound_u("cs_margin_beam", d, n, r, c, k) == Catch::Approx(66.0));
  REQUIRE(loss_bound_u("softmax_margin_beam", d, n, r, c, k) ==
          Catch::Approx((2 * c + r + std::log(2.0)) * d));
  REQUIRE(loss_bound_u("wp_all", d, n, r, c, k) == Catch::Approx(1260.0));
  // zero cost range collapses all cost-weighted ceilings
  REQUIRE(loss_bound_u("cs_margin_last", d, n, 0.0, c, k) == 0.0);
  REQUIRE(loss_bound_u("upper_bound", d, n, 0.0, c, k) == 0.0);
  REQUIRE(loss_bound_u("wp_hybrid", d, n, 0.0, c, k) == 0.0);
  REQUIRE(loss_bound_u("perceptron_first", d, n, 0.0, c, k) == 60.0);
  REQUIRE_THROWS_AS(loss_bound_u("nope", d, n, r, c, k), ConfigError);
}

TEST_CASE("observed per-round losses never exceed their ceiling") {
  const SequenceTask task = SequenceTask::identity(3, 4, 0.4);
  const auto train = generate_dataset(task, 150, 41);
  for (const char* name : {"perceptron_first", "upper_bound", "cs_margin_beam", "log_beam",
                           "wp_bipartite"}) {
    LearnOptions opts;
    opts.k = 2;
    opts.loss_name = name;
    opts.score_clip = 3.0;  // tight clip keeps the ceiling meaningful
    opts.feature_dim = 256;
    opts.optimizer = OnlineOptimizer::ogd(1.0);
    const LearnResult res = learn(train, {}, hamming_factory(3), opts);
    INFO(name);
    for (double v : res.tracker.losses()) REQUIRE(v <= res.u_bound + 1e-9);
  }
}

TEST_CASE("space bound extraction reads branching and cost spread") {
  Example ex;
  ex.tokens = {0, 1};
  ex.labels = {0, 1};
  const TaskSpace ts = hamming_space(ex, 3);
  const SpaceBounds b = space_bounds(ts.space, 2);
  REQUIRE(b.n_max == 6);
  REQUIRE(b.cost_range == 2.0);
}

TEST_CASE("stored rounds replay to the recorded online loss") {
  const SequenceTask task = SequenceTask::identity(3, 4, 0.2);
  const auto train = generate_dataset(task, 40, 19);
  LearnOptions opts;
  opts.k = 2;
  opts.loss_name = "upper_bound";
  opts.feature_dim = 512;
  opts.keep_theta_history = true;
  const LearnResult res = learn(train, {}, hamming_factory(3), opts);
  REQUIRE(res.theta_history.size() == 40);
  const LossFn loss = loss_by_name("upper_bound");
  for (std::size_t t = 0; t < 40; ++t) {
    const double replayed = replay_round_loss(res.tracker.inputs()[t], loss,
                                              res.theta_history[t], opts.score_clip, nullptr);
    REQUIRE(replayed == res.tracker.losses()[t]);
  }
}

TEST_CASE("metrics rows track rounds, running alpha, and the final regret probe") {
  const SequenceTask task = SequenceTask::identity(3, 3, 0.2);
  const auto train = generate_dataset(task, 30, 29);
  LearnOptions opts;
  opts.k = 2;
  opts.feature_dim = 256;
  const LearnResult res = learn(train, {}, hamming_factory(3), opts);
  REQUIRE(res.metrics.size() == 30);
  for (std::size_t i = 0; i < res.metrics.size(); ++i) {
    REQUIRE(res.metrics[i].round == static_cast<long>(i) + 1);
    REQUIRE(res.metrics[i].alpha_hat.has_value());
    REQUIRE(res.metrics[i].eta >= 0.0);
    REQUIRE(res.metrics[i].wallclock_ms == 0.0);
    if (i + 1 < res.metrics.size()) REQUIRE_FALSE(res.metrics[i].gamma_hat.has_value());
  }
  REQUIRE(res.metrics.back().gamma_hat.has_value());
  REQUIRE(res.final_gamma_hat.has_value());
  REQUIRE(res.gamma_certified);  // perceptron_first default is convex
  // eta is nondecreasing in u but shrinks with rounds once u stabilizes
  REQUIRE(res.eta == azuma_eta(res.u_bound, opts.delta, 30));
}

TEST_CASE("oracle runs have no alpha estimate") {
  const SequenceTask task = SequenceTask::identity(3, 3, 0.2);
  const auto train = generate_dataset(task, 10, 29);
  LearnOptions opts;
  opts.strategy = Strategy::oracle();
  opts.feature_dim = 128;
  const LearnResult res = learn(train, {}, hamming_factory(3), opts);
  REQUIRE_FALSE(res.tracker.alpha_hat().has_value());
  for (const auto& row : res.metrics) REQUIRE_FALSE(row.alpha_hat.has_value());
}

TEST_CASE("training reduces decoding cost on a learnable task") {
  const SequenceTask task = SequenceTask::identity(4, 6, 0.05);
  const auto train = generate_dataset(task, 400, 7);
  const auto val = generate_dataset(task, 80, 8);
  LearnOptions opts;
  opts.k = 3;
  opts.loss_name = "upper_bound";
  opts.optimizer = OnlineOptimizer::ogd(0.5);
  opts.feature_dim = 2048;
  const LearnResult res = learn(train, val, hamming_factory(4), opts);
  const auto& costs = res.tracker.terminal_costs();
  double first = 0, last = 0;
  for (int i = 0; i < 100; ++i) {
    first += costs[static_cast<std::size_t>(i)];
    last += costs[costs.size() - 100 + static_cast<std::size_t>(i)];
  }
  REQUIRE(last < first);
  REQUIRE(res.final_validation_cost < 0.5);
  REQUIRE(res.best_validation_cost <= res.final_validation_cost);
  // best-theta decoding reproduces the tracked best validation cost
  const double rerun = decode_mean_cost(val, hamming_factory(4), res.best_theta,
                                        opts.feature_dim, opts.feature_seed,
                                        opts.score_clip, opts.k);
  REQUIRE(rerun == res.best_validation_cost);
}

TEST_CASE("comparator finds the zero-loss parameters of a separable replay") {
  // Two candidates with one-hot features; driving theta[0] up and theta[1]
  // down makes the pruning-bound hinge vanish.
  RegretTracker tracker;
  for (int t = 0; t < 5; ++t) {
    StoredBeamInput input;
    input.k = 1;
    StoredCandidate good;
    good.node = 0;
    good.cost = 0;
    good.features.add(0, 1.0);
    good.features.canonicalize();
    StoredCandidate bad;
    bad.node = 1;
    bad.cost = 1;
    bad.features.add(1, 1.0);
    bad.features.canonicalize();
    input.candidates = {good, bad};
    tracker.add_round(1.0, 0.0, 0, true, false, {input});
  }
  const EmpiricalRegret er =
      empirical_regret(tracker, loss_by_name("upper_bound"), "upper_bound",
                       Parameters(2, 0.0), 100.0, 600);
  REQUIRE(er.certified);
  REQUIRE(er.comparator_mean_loss <= 1e-6);
  REQUIRE(er.gamma_hat == Catch::Approx(er.online_mean_loss - er.comparator_mean_loss));
  REQUIRE(er.online_mean_loss == 1.0);
}

TEST_CASE("empirical regret flags non-convex surrogates as uncertified") {
  RegretTracker tracker;
  StoredBeamInput input;
  input.k = 1;
  StoredCandidate a;
  a.node = 0;
  a.cost = 0;
  a.features.add(0, 1.0);
  a.features.canonicalize();
  input.candidates = {a};
  tracker.add_round(0.0, 0.0, 0, true, false, {input});
  const EmpiricalRegret er = empirical_regret(tracker, loss_by_name("cs_margin_beam"),
                                              "cs_margin_beam", Parameters(1, 0.0), 10.0);
  REQUIRE_FALSE(er.certified);
}

TEST_CASE("handcrafted emission weights decode the identity task perfectly") {
  const SequenceTask task = SequenceTask::identity(3, 5, 0.0);
  const auto data = generate_dataset(task, 30, 3);
  const std::size_t p = 4096;
  const std::uint64_t seed = 0x5eed;
  // weight the (label, token) indicator for label == token
  Parameters theta(p, 0.0);
  std::set<std::int32_t> used;
  for (int y = 0; y < 3; ++y) {
    const std::int32_t idx = feature_index(seed, 3, static_cast<std::uint64_t>(y),
                                           static_cast<std::uint64_t>(y), p);
    REQUIRE(used.insert(idx).second);  // no collisions among the three
    theta[static_cast<std::size_t>(idx)] = 1.0;
  }
  REQUIRE(decode_mean_cost(data, hamming_factory(3), theta, p, seed, 1e6, 1) == 0.0);
}

TEST_CASE("learn validates its options") {
  const SequenceTask task = SequenceTask::identity(2, 2, 0.0);
  const auto train = generate_dataset(task, 5, 1);
  LearnOptions opts;
  opts.feature_dim = 64;
  SECTION("empty training set") {
    REQUIRE_THROWS_AS(learn({}, {}, hamming_factory(2), opts), ConfigError);
  }
  SECTION("bad width") {
    opts.k = 0;
    REQUIRE_THROWS_AS(learn(train, {}, hamming_factory(2), opts), ConfigError);
  }
  SECTION("bad delta") {
    opts.delta = 0.0;
    REQUIRE_THROWS_AS(learn(train, {}, hamming_factory(2), opts), ConfigError);
  }
  SECTION("bad loss name") {
    opts.loss_name = "typo";
    REQUIRE_THROWS_AS(learn(train, {}, hamming_factory(2), opts), ConfigError);
  }
}

TEST_CASE("step tuning returns a grid multiple of the pilot") {
  const SequenceTask task = SequenceTask::identity(2, 3, 0.1);
  const auto train = generate_dataset(task, 20, 2);
  const auto val = generate_dataset(task, 10, 3);
  LearnOptions opts;
  opts.k = 2;
  opts.feature_dim = 128;
  const double step = tune_ogd_step(train, val, hamming_factory(2), opts, 0.4);
  bool on_grid = false;
  for (double f : {0.1, 0.5, 1.0, 2.0, 10.0}) on_grid = on_grid || step == 0.4 * f;
  REQUIRE(on_grid);
}
