#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "attmaddpg/train/actor.hpp"
#include "attmaddpg/train/learner.hpp"
#include "attmaddpg/train/replay_buffer.hpp"
#include "attmaddpg/train/trainer.hpp"
#include "../support/test_support.hpp"

using namespace attmaddpg;
using namespace attmaddpg::train;
using nn::Matrix;
using nn::ParameterStore;

namespace {

Transition make_transition(double tag, bool done = false) {
  Transition t;
  t.obs = {{tag, tag + 0.1}, {tag + 0.2}};
  t.actions = {{tag + 0.3}, {tag + 0.4, tag + 0.5}};
  t.rewards = {tag + 0.6, tag + 0.7};
  t.next_obs = {{tag + 0.8, tag + 0.9}, {tag + 1.0}};
  t.done = done;
  t.episode_seed = static_cast<std::uint64_t>(tag);
  t.step = static_cast<std::uint32_t>(tag);
  return t;
}

ReplayBuffer small_buffer(std::size_t capacity) { return ReplayBuffer(capacity, {2, 1}, {1, 2}); }

harness::ExperimentConfig tiny_config(harness::Algorithm algo, harness::EnvKind env) {
  harness::ExperimentConfig c;
  c.algorithm = algo;
  c.env = env;
  c.episodes = 4;
  c.horizon = 10;
  c.warmup = 16;
  c.batch_size = 8;
  c.hidden_width = 8;
  c.vec_dim = 6;
  return c;
}

}  // namespace

TEST(Actor, OutputsLieInTheActionSpace) {
  std::mt19937_64 rng(1);
  const Actor simplex(6, {env::ActionSpaceKind::simplex, 3, 1.0}, 8);
  const Actor box(6, {env::ActionSpaceKind::box, 2, 1.5}, 8);
  const auto ps = simplex.make_params(rng);
  const auto pb = box.make_params(rng);
  for (int i = 0; i < 200; ++i) {
    const auto o = support::random_vector(6, rng, -5, 5);
    EXPECT_TRUE(simplex.action_space().contains(simplex.act(ps, o)));
    const auto b = box.act(pb, o);
    EXPECT_TRUE(box.action_space().contains(b));
  }
  EXPECT_THROW(simplex.act(ps, std::vector<double>(5, 0.0)), ShapeError);
}

TEST(Actor, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (const auto& space : {env::ActionSpace{env::ActionSpaceKind::simplex, 3, 1.0},
                            env::ActionSpace{env::ActionSpaceKind::box, 2, 2.0}}) {
    const Actor actor(7, space, 16);
    auto params = actor.make_params(rng);
    const auto r = support::actor_grad_check(actor, params, 3, 200, 1e-5, 5);
    EXPECT_LT(r.params.max_rel_error, 1e-4) << r.params.worst_name;
    EXPECT_LT(r.inputs.max_rel_error, 1e-4);
  }
}

TEST(Exploration, NoiseScheduleIsLinearThenFlat) {
  EXPECT_DOUBLE_EQ(noise_scale(0, 100, 0.3, 0.05, 0.5), 0.3);
  EXPECT_DOUBLE_EQ(noise_scale(25, 100, 0.3, 0.05, 0.5), 0.175);
  EXPECT_DOUBLE_EQ(noise_scale(50, 100, 0.3, 0.05, 0.5), 0.05);
  EXPECT_DOUBLE_EQ(noise_scale(99, 100, 0.3, 0.05, 0.5), 0.05);
  EXPECT_DOUBLE_EQ(noise_scale(0, 100, 0.3, 0.05, 0.0), 0.05);
}

TEST(Exploration, ProjectsBackIntoTheActionSpace) {
  std::mt19937_64 rng(3);
  const env::ActionSpace simplex{env::ActionSpaceKind::simplex, 4, 1.0};
  const env::ActionSpace box{env::ActionSpaceKind::box, 2, 1.0};
  for (int i = 0; i < 2000; ++i) {
    EXPECT_TRUE(simplex.contains(explore(support::random_simplex(4, rng), simplex, 2.0, rng)));
    EXPECT_TRUE(box.contains(explore(support::random_vector(2, rng), box, 2.0, rng)));
  }
  const std::vector<double> a{0.2, 0.3, 0.5, 0.0};
  EXPECT_EQ(explore(a, simplex, 0.0, rng), a);
}

TEST(ReplayBuffer, StoresAndReturnsTransitions) {
  auto buf = small_buffer(4);
  buf.push(make_transition(1));
  const auto t = buf.at(0);
  const auto ref = make_transition(1);
  EXPECT_EQ(t.obs, ref.obs);
  EXPECT_EQ(t.actions, ref.actions);
  EXPECT_EQ(t.rewards, ref.rewards);
  EXPECT_EQ(t.next_obs, ref.next_obs);
  EXPECT_EQ(t.episode_seed, 1u);
}

TEST(ReplayBuffer, EvictsOldestFirst) {
  auto buf = small_buffer(3);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).obs[0][0], 2.0);
  EXPECT_EQ(buf.at(2).obs[0][0], 4.0);
}

TEST(ReplayBuffer, BatchColumnsAreTransitions) {
  auto buf = small_buffer(10);
  for (int i = 0; i < 6; ++i) buf.push(make_transition(i, i == 5));
  const std::vector<std::size_t> idx{5, 0, 3};
  const auto b = buf.gather(idx);
  EXPECT_EQ(b.obs.rows(), 3);
  EXPECT_EQ(b.actions.rows(), 3);
  EXPECT_EQ(b.obs(2, 0), 5.2);
  EXPECT_EQ(b.actions(2, 1), 0.5);
  EXPECT_EQ(b.rewards(1, 2), 3.7);
  EXPECT_EQ(b.next_obs(0, 2), 3.8);
  EXPECT_EQ(b.done(0, 0), 1.0);
  EXPECT_EQ(b.done(0, 1), 0.0);
}

TEST(ReplayBuffer, SamplingIsUniform) {
  auto buf = small_buffer(5);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  std::mt19937_64 rng(4);
  std::vector<int> counts(5, 0);
  const auto b = buf.sample(50000, rng);
  for (Eigen::Index c = 0; c < b.obs.cols(); ++c) ++counts[static_cast<std::size_t>(b.obs(0, c))];
  for (int n : counts) EXPECT_NEAR(n, 10000, 400);
}

TEST(ReplayBuffer, ErrorsAndSnapshotRoundTrip) {
  auto buf = small_buffer(4);
  std::mt19937_64 rng(5);
  EXPECT_THROW(buf.sample(1, rng), UsageError);
  auto bad = make_transition(0);
  bad.obs[0].push_back(1.0);
  EXPECT_THROW(buf.push(bad), ShapeError);
  for (int i = 0; i < 6; ++i) buf.push(make_transition(i, i % 2 == 0));
  std::stringstream ss;
  buf.save(ss);
  const auto back = ReplayBuffer::load(ss);
  ASSERT_EQ(back.size(), buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(back.at(i).obs, buf.at(i).obs);
    EXPECT_EQ(back.at(i).done, buf.at(i).done);
    EXPECT_EQ(back.at(i).step, buf.at(i).step);
  }
  std::stringstream junk("not a snapshot\n");
  EXPECT_THROW(ReplayBuffer::load(junk), ValidationError);
}

namespace {

// Learner fixture on the routing env with small networks.
struct LearnerFixture {
  std::unique_ptr<Trainer> trainer;
  Batch batch;

  explicit LearnerFixture(harness::Algorithm algo) {
    auto c = tiny_config(algo, harness::EnvKind::routing_small);
    c.episodes = 2;
    trainer = std::make_unique<Trainer>(c, 7);
    trainer->train();
    std::mt19937_64 rng(8);
    batch = trainer->replay().sample(16, rng);
  }
};

}  // namespace

TEST(Learner, TdTargetsMatchPerSampleRecomputation) {
  LearnerFixture f(harness::Algorithm::att_maddpg);
  f.batch.done(0, 3) = 1.0;
  auto& agents = f.trainer->agents();
  const Matrix y = td_targets(agents, 1, f.batch, 0.95);
  const auto& layout = agents[1].critic->layout();
  for (Eigen::Index c = 0; c < 16; ++c) {
    Matrix next_act(static_cast<Eigen::Index>(layout.act_total()), 1);
    for (std::size_t j = 0; j < agents.size(); ++j) {
      const Matrix o = f.batch.next_obs.block(static_cast<Eigen::Index>(layout.obs_offset(j)), c,
                                              static_cast<Eigen::Index>(layout.obs_dims[j]), 1);
      next_act.middleRows(static_cast<Eigen::Index>(layout.act_offset(j)), static_cast<Eigen::Index>(layout.act_dims[j])) =
          agents[j].actor.forward(agents[j].actor_target, o);
    }
    const double q_next = agents[1].critic->forward(agents[1].critic_target, Matrix(f.batch.next_obs.col(c)), next_act,
                                                    nullptr)(0, 0);
    const double expected = f.batch.rewards(1, c) + 0.95 * (1.0 - f.batch.done(0, c)) * q_next;
    EXPECT_NEAR(y(0, c), expected, 1e-12);
  }
}

TEST(Learner, CriticUpdateTouchesOnlyThatCritic) {
  LearnerFixture f(harness::Algorithm::maddpg);
  auto& agents = f.trainer->agents();
  const auto actors_before = agents[0].actor_params;
  const auto other_critic = agents[1].critic_params;
  const auto own_critic = agents[0].critic_params;
  critic_update(agents, 0, f.batch, 0.95);
  EXPECT_TRUE(agents[0].actor_params.values_equal(actors_before));
  EXPECT_TRUE(agents[1].critic_params.values_equal(other_critic));
  EXPECT_FALSE(agents[0].critic_params.values_equal(own_critic));
}

TEST(Learner, RepeatedCriticUpdatesReduceTheLossOnAFixedBatch) {
  LearnerFixture f(harness::Algorithm::att_maddpg);
  auto& agents = f.trainer->agents();
  const double first = critic_update(agents, 0, f.batch, 0.95).loss;
  double last = first;
  for (int i = 0; i < 100; ++i) last = critic_update(agents, 0, f.batch, 0.95).loss;
  EXPECT_LT(last, first);
}

TEST(Learner, ActorUpdateTouchesOnlyThatActorAndRaisesQ) {
  LearnerFixture f(harness::Algorithm::att_maddpg);
  auto& agents = f.trainer->agents();
  const auto critic_before = agents[0].critic_params;
  const auto other_actor = agents[1].actor_params;
  const double q0 = actor_update(agents, 0, f.batch).mean_q;
  EXPECT_TRUE(agents[0].critic_params.values_equal(critic_before));
  EXPECT_TRUE(agents[1].actor_params.values_equal(other_actor));
  double q = q0;
  for (int i = 0; i < 30; ++i) q = actor_update(agents, 0, f.batch).mean_q;
  EXPECT_GT(q, q0);
}

TEST(Learner, SoftUpdateMovesTargetsTowardsOnline) {
  LearnerFixture f(harness::Algorithm::maddpg);
  auto& ag = f.trainer->agents()[0];
  ParameterStore expected = ag.actor_target;
  nn::soft_update(expected, ag.actor_params, 0.1);
  soft_update_targets(ag, 0.1);
  EXPECT_TRUE(ag.actor_target.values_equal(expected));
}

TEST(Trainer, IdenticalSeedsGiveBitwiseIdenticalLogs) {
  for (auto algo : {harness::Algorithm::att_maddpg, harness::Algorithm::maddpg, harness::Algorithm::khead,
                    harness::Algorithm::ddpg}) {
    const auto c = tiny_config(algo, harness::EnvKind::coop_nav);
    Trainer a(c, 3), b(c, 3);
    const auto la = a.train();
    const auto lb = b.train();
    for (std::size_t i = 0; i < la.size(); ++i) {
      EXPECT_EQ(la[i].reward, lb[i].reward);
      EXPECT_EQ(la[i].critic_loss, lb[i].critic_loss);
    }
    EXPECT_TRUE(a.agents()[0].critic_params.values_equal(b.agents()[0].critic_params));
  }
}

TEST(Trainer, DifferentSeedsDiffer) {
  const auto c = tiny_config(harness::Algorithm::maddpg, harness::EnvKind::coop_nav);
  Trainer a(c, 1), b(c, 2);
  EXPECT_NE(a.train().back().reward, b.train().back().reward);
}

TEST(Trainer, LearningStartsAfterWarmup) {
  auto c = tiny_config(harness::Algorithm::maddpg, harness::EnvKind::coop_nav);
  c.warmup = 25;
  Trainer t(c, 1);
  const auto logs = t.train();
  EXPECT_EQ(logs[0].updates, 0u);
  EXPECT_EQ(logs[1].updates, 0u);
  EXPECT_EQ(logs[2].updates, 6u);  // transitions 25..30 trigger updates
  EXPECT_EQ(logs[2].critic_loss.size(), 3u);
  EXPECT_GT(logs[2].critic_loss[0], 0.0);
}

TEST(Trainer, RuleBasedAlgorithmsDoNotLearn) {
  const auto c = tiny_config(harness::Algorithm::wcmp, harness::EnvKind::routing_small);
  Trainer t(c, 1);
  EXPECT_FALSE(t.learns());
  const auto logs = t.train();
  EXPECT_EQ(logs.size(), 4u);
  EXPECT_EQ(t.replay().size(), 0u);
  EXPECT_EQ(logs[0].noise_scale, 0.0);
}

TEST(Trainer, PolicyNeedsNoCritic) {
  auto c = tiny_config(harness::Algorithm::att_maddpg, harness::EnvKind::coop_nav);
  std::unique_ptr<env::Policy> policy;
  {
    Trainer t(c, 5);
    t.train();
    policy = t.policy();
  }
  auto e = harness::make_environment(c);
  auto obs = e->reset(11);
  for (bool done = false; !done;) {
    const auto r = e->step(policy->act_joint(obs));
    done = r.done;
    obs = r.observation;
  }
  SUCCEED();
}
