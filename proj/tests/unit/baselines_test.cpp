#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "attmaddpg/baselines/baselines.hpp"
#include "../support/test_support.hpp"

using namespace attmaddpg;
using namespace attmaddpg::baselines;

TEST(Wcmp, TwoPathInverseCostRatios) {
  const auto r = wcmp_split(std::vector<double>{0.2, 0.6});
  // 1/0.201 : 1/0.601 normalised = 0.601/0.802 : 0.201/0.802
  EXPECT_NEAR(r[0], 0.601 / 0.802, 1e-12);
  EXPECT_NEAR(r[1], 0.201 / 0.802, 1e-12);
  EXPECT_NEAR(r[0], 0.74937655860349128, 1e-12);
}

TEST(Wcmp, EqualCostsSplitEvenlyAndIdlePathsDominate) {
  const auto even = wcmp_split(std::vector<double>{0.4, 0.4, 0.4});
  for (double v : even) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto idle = wcmp_split(std::vector<double>{0.0, 1.0});
  EXPECT_GT(idle[0], 0.999);
}

TEST(Wcmp, OutputsAreOnTheSimplex) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto costs = support::random_vector(2 + static_cast<std::size_t>(i % 4), rng, 0.0, 3.0);
    const auto r = wcmp_split(costs);
    EXPECT_TRUE((env::ActionSpace{env::ActionSpaceKind::simplex, r.size(), 1.0}.contains(r)));
  }
  EXPECT_THROW(wcmp_split(std::vector<double>{}), ShapeError);
  EXPECT_THROW(wcmp_split(std::vector<double>{-1.0, 0.0}), ContractViolation);
}

TEST(Wcmp, PolicyReadsNewestUtilizationsFromTheObservation) {
  auto topo = env::load_topology_file(std::string(ATTMADDPG_DATA_DIR) + "/small.topo");
  env::RoutingOptions opts;
  opts.demand_noise = 0.0;
  env::RoutingEnv e(topo, opts);
  e.reset(1);
  e.set_demands(std::vector<double>{4.0, 6.0});
  const auto r = e.step(env::JointAction{{{0.5, 0.5}, {0.25, 0.75}}});
  const WcmpPolicy policy(e);
  const auto split = policy.act(0, r.observation.per_agent[0]);
  // agent 0: path B-E-F-D and path B-D
  const auto& u = e.last_utilizations();
  const auto l = [&](const char* a, const char* b) { return u[*topo.find_link(a, b)]; };
  const double c0 = l("B", "E") + l("E", "F") + l("F", "D");
  const double c1 = l("B", "D");
  const auto expected = wcmp_split(std::vector<double>{c0, c1});
  EXPECT_NEAR(split[0], expected[0], 1e-15);
  EXPECT_NEAR(split[1], expected[1], 1e-15);
}

TEST(Greedy, HeadsForTheNearestLandmarkAtFullSpeed) {
  const std::vector<env::Vec2> offsets{{3, 4}, {-1, 1}, {2, 2}};
  const auto v = greedy_navigate(offsets, 1.0);
  EXPECT_NEAR(v.x, -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(v.y, 1.0 / std::sqrt(2.0), 1e-15);
  const auto tie = greedy_navigate(std::vector<env::Vec2>{{0, 1}, {1, 0}}, 2.0);
  EXPECT_EQ(tie.x, 0.0);
  EXPECT_EQ(tie.y, 2.0);
  const auto stop = greedy_navigate(std::vector<env::Vec2>{{1e-7, 0}, {5, 5}}, 1.0);
  EXPECT_EQ(stop.x, 0.0);
  EXPECT_EQ(stop.y, 0.0);
  const auto prey = greedy_pursue({0, -3}, 1.0);
  EXPECT_EQ(prey.y, -1.0);
}

TEST(Greedy, AgentsOnLandmarksStayPutWithZeroReward) {
  env::ParticleEnv e({});
  e.reset(1);
  env::WorldState s;
  s.agent_positions = {{1, 2}, {5, 5}, {8, 1}};
  s.agent_velocities.assign(3, {});
  s.landmark_positions = {{8, 1}, {1, 2}, {5, 5}};
  e.set_state(s);
  const GreedyPolicy policy(e);
  auto obs = e.observe();
  for (int t = 0; t < 5; ++t) {
    const auto a = policy.act_joint(obs);
    for (const auto& v : a.per_agent) EXPECT_EQ(v, (std::vector<double>{0.0, 0.0}));
    const auto r = e.step(a);
    EXPECT_EQ(r.rewards[0], 0.0);
    obs = r.observation;
  }
}

TEST(Greedy, ActionsStayInTheBox) {
  env::ParticleOptions p;
  p.task = env::ParticleTask::pursuit;
  env::ParticleEnv e(p);
  const GreedyPolicy policy(e);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto obs = e.reset(seed);
    for (bool done = false; !done;) {
      const auto r = e.step(policy.act_joint(obs));
      done = r.done;
      obs = r.observation;
    }
  }
  SUCCEED();
}
