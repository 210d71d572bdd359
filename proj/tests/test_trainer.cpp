#include <doctest.h>

#include <cmath>
#include <set>

#include "arac/errors.hpp"
#include "arac/mapgen.hpp"
#include "arac/rollout.hpp"
#include "arac/trainer.hpp"

using namespace arac;

namespace {

ScenarioConfig pursuit_cfg(int m = 2) {
    ScenarioConfig c;
    c.scenario = Scenario::Pursuit;
    c.team_size = m;
    c.max_steps = 24;
    return c;
}

NetConfig tiny_net(int f) {
    NetConfig n;
    n.feature_width = f;
    n.embed_dim = 4;
    n.encoder_layers = 1;
    n.heads = 2;
    n.ff_mult = 2;
    n.critic_hidden = 8;
    return n;
}

Coefficients fast_coeffs() {
    Coefficients c;
    c.lr = 1e-3;
    c.coef_lr = 1e-2;
    c.gamma = 0.9;
    c.tau = 0.05;
    return c;
}

// roll a few episodes with random actions to fill a buffer
void fill_buffer(Trainer& trainer, const ScenarioConfig& cfg, const World& w, int episodes,
                 uint64_t seed) {
    const TeamPolicy ours = random_team_policy(cfg, w, Team::Ours);
    const TeamPolicy theirs = scripted_opponent(cfg, w);
    for (int e = 0; e < episodes; ++e) {
        Rng rng = Rng::stream(seed, static_cast<uint64_t>(e));
        std::vector<Transition> sink;
        run_episode(cfg, w, ours, theirs, rng, &sink);
        for (auto& tr : sink) trainer.buffer().push(std::move(tr));
    }
}

}  // namespace

TEST_CASE("joint_terms: formulas and additivity") {
    // uniform policy over 4 actions against a one-hot reference
    const std::vector<std::vector<double>> dists = {{0.25, 0.25, 0.25, 0.25}};
    const std::vector<ReferenceDistribution> refs = {{{0.0, 1.0, 0.0, 0.0}}};
    const JointTerms jt = joint_terms(dists, refs);
    CHECK(jt.kl == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(jt.entropy == doctest::Approx(std::log(4.0)).epsilon(1e-15));

    // near-one-hot policy matching the reference: kl ~ -log 0.999
    const std::vector<std::vector<double>> sharp = {{0.999, 0.0005, 0.0005}};
    const std::vector<ReferenceDistribution> ref1 = {{{1.0, 0.0, 0.0}}};
    CHECK(joint_terms(sharp, ref1).kl == doctest::Approx(-std::log(0.999)).epsilon(1e-12));

    // two agents: joint values are sums of the per-agent values
    const std::vector<std::vector<double>> two = {{0.25, 0.25, 0.25, 0.25}, {0.5, 0.5}};
    const std::vector<ReferenceDistribution> refs2 = {{{0.0, 1.0, 0.0, 0.0}}, {{1.0, 0.0}}};
    const JointTerms j2 = joint_terms(two, refs2);
    CHECK(j2.kl == doctest::Approx(j2.agent_kl[0] + j2.agent_kl[1]).epsilon(1e-15));
    CHECK(j2.kl == doctest::Approx(std::log(4.0) + std::log(2.0)).epsilon(1e-12));
    CHECK(j2.entropy == doctest::Approx(j2.agent_entropy[0] + j2.agent_entropy[1]).epsilon(1e-15));

    CHECK_THROWS_AS(joint_terms({{0.5, 0.5}}, {{{1.0, 0.0, 0.0}}}), SupportMismatch);
    CHECK_THROWS_AS(joint_terms({{1.0, 0.0}}, {{{0.0, 1.0}}}), SupportMismatch);
}

TEST_CASE("dual_update: stationarity and sign behaviour") {
    Coefficients c = fast_coeffs();
    c.log_alpha = std::log(0.2);
    c.log_beta = 0.0;

    DualStats at_target{0.4, 0.4, c.target_kl};
    const Coefficients same = dual_update(at_target, c, true, true);
    CHECK(same.log_alpha == c.log_alpha);  // zero gradient at equality
    CHECK(same.log_beta == c.log_beta);

    DualStats hot{0.9, 0.4, c.target_kl + 1.0};
    const Coefficients moved = dual_update(hot, c, true, true);
    CHECK(moved.log_alpha < c.log_alpha);  // entropy above target: alpha shrinks
    CHECK(moved.log_beta > c.log_beta);    // KL above target: beta grows

    DualStats cold{0.1, 0.4, c.target_kl - 0.5};
    const Coefficients back = dual_update(cold, c, true, true);
    CHECK(back.log_alpha > c.log_alpha);
    CHECK(back.log_beta < c.log_beta);

    const Coefficients frozen = dual_update(hot, c, true, false);
    CHECK(frozen.log_beta == c.log_beta);  // fixed-beta mode skips the move
    CHECK(std::exp(frozen.log_alpha) > 0.0);
}

TEST_CASE("soft_update endpoints and midpoint") {
    Rng rng(1);
    const NetConfig nc = tiny_net(3);
    ParameterSet online = init_params(nc, rng, 0.2, 1.0);
    ParameterSet target = init_params(nc, rng, 0.2, 1.0);

    ParameterSet t1 = target;
    soft_update(t1, online, 1.0);
    for (size_t i = 0; i < t1.entries.size(); ++i)
        CHECK(t1.entries[i].second.v == online.entries[i].second.v);

    ParameterSet t0 = target;
    soft_update(t0, online, 0.0);
    for (size_t i = 0; i < t0.entries.size(); ++i)
        CHECK(t0.entries[i].second.v == target.entries[i].second.v);

    ParameterSet mid = target;
    mid.entries[0].second.zero();
    ParameterSet two = online;
    for (auto& x : two.entries[0].second.v) x = 2.0;
    soft_update(mid, two, 0.5);
    for (double x : mid.entries[0].second.v) CHECK(x == 1.0);
}

TEST_CASE("replay buffer: FIFO bound and sampling without replacement") {
    ReplayBuffer buf(5);
    for (int i = 0; i < 9; ++i) {
        Transition t;
        t.reward = i;
        buf.push(std::move(t));
        CHECK(buf.size() <= 5);
    }
    // oldest entries displaced: rewards 4..8 remain
    double lo = 1e9;
    for (size_t i = 0; i < buf.size(); ++i) lo = std::min(lo, buf.at(i).reward);
    CHECK(lo == 4.0);

    Rng rng(3);
    const auto batch = buf.sample(5, rng);
    std::set<const Transition*> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 5);  // without replacement
    CHECK_THROWS_AS(buf.sample(6, rng), EmptyBatch);
}

TEST_CASE("critic loss reductions: gamma zero and terminal transitions") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 4), cfg);
    Coefficients c = fast_coeffs();
    c.gamma = 0.0;
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 5, 4, 64, false);
    fill_buffer(trainer, cfg, w, 3, 5);

    Rng rng(9);
    const auto batch = trainer.buffer().sample(4, rng);
    Tape scratch;
    Rng trng(11);
    const auto ys = critic_targets(scratch, cfg, w, trainer.params(), trainer.target_params(), c,
                                   false, batch, trng);
    for (size_t i = 0; i < batch.size(); ++i) CHECK(ys[i] == batch[i]->reward);  // gamma = 0

    // terminal transitions keep y = r for any gamma
    Coefficients c9 = fast_coeffs();
    std::vector<const Transition*> terms;
    for (size_t i = 0; i < trainer.buffer().size(); ++i)
        if (trainer.buffer().at(i).terminal) terms.push_back(&trainer.buffer().at(i));
    REQUIRE(!terms.empty());
    const auto yt = critic_targets(scratch, cfg, w, trainer.params(), trainer.target_params(), c9,
                                   false, terms, trng);
    for (size_t i = 0; i < terms.size(); ++i) CHECK(yt[i] == terms[i]->reward);
}

TEST_CASE("critic loss matches a scalar evaluation of the target regression") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 8), cfg);
    const Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 6, 4, 64, false);
    fill_buffer(trainer, cfg, w, 2, 6);

    Rng rng(13);
    const auto batch = trainer.buffer().sample(2, rng);
    Tape scratch;
    Rng trng(17);
    const auto ys = critic_targets(scratch, cfg, w, trainer.params(), trainer.target_params(), c,
                                   false, batch, trng);

    Tape t;
    const BoundParams p = bind_params(t, trainer.params());
    const CriticLossRefs refs = build_critic_loss(t, p, cfg, w, batch, ys);

    // independent arrangement: per transition, joint Q via the VDN op, then
    // the mean of squared residuals
    double want1 = 0.0, want2 = 0.0;
    Tape t2;
    const BoundParams p2 = bind_params(t2, trainer.params());
    for (size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = *batch[b];
        const Ref h = encode(t2, p2, featurize(tr.s, w.dist, w.dmg, cfg).values, w.adjacency);
        std::vector<Ref> tildes;
        std::vector<CriticInput> ins;
        for (int agent = 0; agent < cfg.num_ours(); ++agent) {
            const ActionId a = tr.ours[agent];
            tildes.push_back(decode(t2, p2, h, tr.s.positions[agent]));
            ins.push_back(critic_input_for(cfg, w, tr.s, agent,
                                           {a, a.kind == ActionId::Kind::Move
                                                   ? a.target
                                                   : tr.s.positions[a.target]}));
        }
        const double q1 = t2.scalar_value(critic_q_vdn(t2, p2, 1, h, tildes, ins).joint);
        const double q2 = t2.scalar_value(critic_q_vdn(t2, p2, 2, h, tildes, ins).joint);
        want1 += 0.5 * (q1 - ys[b]) * (q1 - ys[b]);
        want2 += 0.5 * (q2 - ys[b]) * (q2 - ys[b]);
    }
    want1 /= static_cast<double>(batch.size());
    want2 /= static_cast<double>(batch.size());
    CHECK(t.scalar_value(refs.loss1) == doctest::Approx(want1).epsilon(1e-12));
    CHECK(t.scalar_value(refs.loss2) == doctest::Approx(want2).epsilon(1e-12));
}

TEST_CASE("policy loss equals the enumerated expectation of the objective") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 12), cfg);
    Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 7, 4, 64, false);
    fill_buffer(trainer, cfg, w, 2, 7);

    Rng rng(19);
    const auto batch = trainer.buffer().sample(3, rng);
    std::vector<const GameState*> states;
    for (auto* tr : batch) states.push_back(&tr->s);

    Tape scratch;
    const QTables qt = policy_q_tables(scratch, cfg, w, trainer.params(), states);

    Tape t;
    const BoundParams p = bind_params(t, trainer.params());
    const PolicyLossBuild pl = build_policy_loss(t, p, cfg, w, states, qt, c, false);

    // scalar enumeration of Eq: sum_a pi(a)(alpha log pi(a) - Q(a)) + beta KL
    double want = 0.0;
    Tape t2;
    const BoundParams p2 = bind_params(t2, trainer.params());
    for (size_t b = 0; b < states.size(); ++b) {
        const TeamEval ev = eval_team(t2, p2, cfg, w, *states[b], Team::Ours);
        for (size_t i = 0; i < ev.agents.size(); ++i) {
            const Mat& probs = t2.value(ev.agents[i].dist);
            double term = 0.0, kl = 0.0;
            const ReferenceDistribution ref = reference_for(cfg, w, *states[b], ev.agents[i].agent);
            for (int a = 0; a < probs.cols; ++a) {
                term += probs.v[a] * (c.alpha() * std::log(probs.v[a]) - qt[b][i][a]);
                if (ref.probs[a] > 0.0)
                    kl += ref.probs[a] * (std::log(ref.probs[a]) - std::log(probs.v[a]));
            }
            want += term + c.beta() * kl;
        }
    }
    want /= static_cast<double>(states.size());
    CHECK(t.scalar_value(pl.loss) == doctest::Approx(want).epsilon(1e-12));

    // beta = 0 reduction: the plain discrete soft-actor objective
    const PolicyLossBuild sac = build_policy_loss(t, p, cfg, w, states, qt, c, true);
    double want_sac = 0.0;
    for (size_t b = 0; b < states.size(); ++b) {
        const TeamEval ev = eval_team(t2, p2, cfg, w, *states[b], Team::Ours);
        for (size_t i = 0; i < ev.agents.size(); ++i) {
            const Mat& probs = t2.value(ev.agents[i].dist);
            for (int a = 0; a < probs.cols; ++a)
                want_sac += probs.v[a] * (c.alpha() * std::log(probs.v[a]) - qt[b][i][a]);
        }
    }
    want_sac /= static_cast<double>(states.size());
    CHECK(t.scalar_value(sac.loss) == doctest::Approx(want_sac).epsilon(1e-12));
}

TEST_CASE("losses are permutation-invariant over batch order") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 14), cfg);
    const Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 8, 4, 64, false);
    fill_buffer(trainer, cfg, w, 2, 8);

    Rng rng(23);
    auto batch = trainer.buffer().sample(4, rng);
    Tape scratch;
    Rng trng(29);
    const auto ys = critic_targets(scratch, cfg, w, trainer.params(), trainer.target_params(), c,
                                   false, batch, trng);

    Tape t;
    const BoundParams p = bind_params(t, trainer.params());
    const double fwd = t.scalar_value(build_critic_loss(t, p, cfg, w, batch, ys).total);

    std::vector<const Transition*> rev(batch.rbegin(), batch.rend());
    std::vector<double> ys_rev(ys.rbegin(), ys.rend());
    Tape t2;
    const BoundParams p2 = bind_params(t2, trainer.params());
    const double bwd = t2.scalar_value(build_critic_loss(t2, p2, cfg, w, rev, ys_rev).total);
    CHECK(fwd == doctest::Approx(bwd).epsilon(1e-12));
}

TEST_CASE("bc loss: uniform policy gives log |A| per agent, gradient passes FD") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const Graph star(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    const World w(star, cfg);
    Rng rng(31);
    ParameterSet ps = init_params(tiny_net(cfg.feature_width()), rng, 0.2, 1.0);
    ps.find("ptr_wq").zero();  // uniform pointer scores

    GameState s{{0, 2}, {1, 1}, {1, 1}, 0, false, Winner::None};
    Tape t;
    const BoundParams p = bind_params(t, ps);
    const Ref loss = build_bc_loss(t, p, cfg, w, {&s});
    CHECK(t.scalar_value(loss) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // FD check through one parameter entry
    const size_t pi = [&] {
        for (size_t i = 0; i < ps.entries.size(); ++i)
            if (ps.entries[i].first == "ptr_wk") return i;
        return size_t{0};
    }();
    const double err = grad_check(
        [&](Tape& tt, Ref x) {
            BoundParams pp;
            pp.set = &ps;
            for (size_t i = 0; i < ps.entries.size(); ++i)
                pp.refs.push_back(i == pi ? x : tt.input(ps.entries[i].second));
            return build_bc_loss(tt, pp, cfg, w, {&s});
        },
        ps.entries[pi].second, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("train_step: no-op below batch size, target drift bound, BRAC freeze") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 16), cfg);
    const Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 9, 8, 64, false);

    const TrainMetrics none = trainer.train_step();
    CHECK_FALSE(none.applied);  // buffer empty

    fill_buffer(trainer, cfg, w, 12, 9);
    const ParameterSet before_t = trainer.target_params();
    const ParameterSet before_p = trainer.params();
    const TrainMetrics m = trainer.train_step();
    CHECK(m.applied);
    CHECK(std::isfinite(m.critic1_loss));
    CHECK(std::isfinite(m.policy_loss));

    // |target' - target|_inf <= tau |online_after - target|_inf, elementwise
    const ParameterSet& after_t = trainer.target_params();
    const ParameterSet& after_p = trainer.params();
    for (size_t i = 0; i < after_t.entries.size(); ++i) {
        for (size_t j = 0; j < after_t.entries[i].second.size(); ++j) {
            const double drift = std::abs(after_t.entries[i].second.v[j] -
                                          before_t.entries[i].second.v[j]);
            const double gap = std::abs(after_p.entries[i].second.v[j] -
                                        before_t.entries[i].second.v[j]);
            CHECK(drift <= c.tau * gap + 1e-15);
        }
    }
    (void)before_p;

    // BRAC keeps log_beta bit-identical
    Trainer brac(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Brac, 10, 8, 64, false);
    fill_buffer(brac, cfg, w, 12, 10);
    const double lb = brac.coeffs().log_beta;
    for (int i = 0; i < 3; ++i) brac.train_step();
    CHECK(brac.coeffs().log_beta == lb);
    CHECK(brac.params().log_beta() == lb);
}

TEST_CASE("dual-update sign laws hold on every step of a short run") {
    const ScenarioConfig cfg = pursuit_cfg(2);
    const World w(generate_map(MapKind::Random, 8, 18), cfg);
    Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 11, 8, 256, false);
    fill_buffer(trainer, cfg, w, 12, 11);

    double alpha_prev = trainer.coeffs().alpha();
    double beta_prev = trainer.coeffs().beta();
    for (int i = 0; i < 20; ++i) {
        const TrainMetrics m = trainer.train_step();
        REQUIRE(m.applied);
        const double da = m.alpha - alpha_prev;
        const double db = m.beta - beta_prev;
        if (m.hbar > m.entropy) CHECK(da >= 0.0);
        if (m.hbar < m.entropy) CHECK(da <= 0.0);
        if (m.hbar == m.entropy) CHECK(da == 0.0);
        if (m.kl > trainer.coeffs().target_kl) CHECK(db >= 0.0);
        if (m.kl < trainer.coeffs().target_kl) CHECK(db <= 0.0);
        CHECK(m.alpha > 0.0);
        CHECK(m.beta > 0.0);
        alpha_prev = m.alpha;
        beta_prev = m.beta;
    }
}

TEST_CASE("beta-disabled adaptive mode is bit-identical to fixed-beta SAC") {
    const ScenarioConfig cfg = pursuit_cfg(1);
    const World w(generate_map(MapKind::Random, 6, 20), cfg);
    const Coefficients c = fast_coeffs();
    Trainer a(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 12, 4, 64, true);
    Trainer b(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Brac, 12, 4, 64, true);
    fill_buffer(a, cfg, w, 3, 12);
    fill_buffer(b, cfg, w, 3, 12);
    for (int i = 0; i < 4; ++i) {
        const TrainMetrics ma = a.train_step();
        const TrainMetrics mb = b.train_step();
        CHECK(ma.critic1_loss == mb.critic1_loss);
        CHECK(ma.policy_loss == mb.policy_loss);
        CHECK(ma.alpha == mb.alpha);
        CHECK(ma.beta == 0.0);
        CHECK(ma.kl == 0.0);
    }
    for (size_t i = 0; i < a.params().entries.size(); ++i)
        CHECK(a.params().entries[i].second.v == b.params().entries[i].second.v);
}

TEST_CASE("losses stay finite over fuzzed batches") {
    const ScenarioConfig cfg = pursuit_cfg(2);
    const World w(generate_map(MapKind::Random, 10, 22), cfg);
    const Coefficients c = fast_coeffs();
    Trainer trainer(cfg, w, tiny_net(cfg.feature_width()), c, TrainerMode::Arac, 13, 6, 256, false);
    fill_buffer(trainer, cfg, w, 12, 13);
    for (int i = 0; i < 10; ++i) {
        const TrainMetrics m = trainer.train_step();
        REQUIRE(m.applied);
        CHECK(std::isfinite(m.critic1_loss));
        CHECK(std::isfinite(m.critic2_loss));
        CHECK(std::isfinite(m.policy_loss));
        CHECK(std::isfinite(m.entropy));
        CHECK(std::isfinite(m.kl));
    }
}
