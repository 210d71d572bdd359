#include "arac/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "arac/errors.hpp"

namespace arac {

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
    if (batch < 1 || static_cast<size_t>(batch) > data_.size())
        throw EmptyBatch("sample: batch " + std::to_string(batch) + " from buffer of " +
                         std::to_string(data_.size()));
    std::vector<int> idx = rng.sample_distinct(static_cast<int>(data_.size()), batch);
    std::vector<const Transition*> out(batch);
    for (int i = 0; i < batch; ++i) out[i] = &data_[idx[i]];
    return out;
}

JointTerms joint_terms(const std::vector<std::vector<double>>& dists,
                       const std::vector<ReferenceDistribution>& refs) {
    if (dists.size() != refs.size()) throw SupportMismatch("agent counts disagree");
    JointTerms jt;
    for (size_t i = 0; i < dists.size(); ++i) {
        const auto& p = dists[i];
        const auto& r = refs[i].probs;
        if (p.size() != r.size()) throw SupportMismatch("support sizes disagree");
        double h = 0.0, kl = 0.0;
        for (size_t a = 0; a < p.size(); ++a) {
            if (p[a] > 0.0) h -= p[a] * std::log(p[a]);
            if (r[a] > 0.0) {
                if (p[a] <= 0.0) throw SupportMismatch("reference action outside policy support");
                kl += r[a] * (std::log(r[a]) - std::log(p[a]));
            }
        }
        jt.agent_entropy.push_back(h);
        jt.agent_kl.push_back(kl);
        jt.entropy += h;
        jt.kl += kl;
    }
    return jt;
}

Coefficients dual_update(const DualStats& stats, const Coefficients& c, bool update_alpha,
                         bool update_beta) {
    Coefficients n = c;
    if (update_alpha) n.log_alpha = c.log_alpha - c.coef_lr * c.alpha() * (stats.entropy - stats.hbar);
    if (update_beta) n.log_beta = c.log_beta + c.coef_lr * c.beta() * (stats.kl - c.target_kl);
    return n;
}

void soft_update(ParameterSet& target, const ParameterSet& online, double tau) {
    if (target.entries.size() != online.entries.size())
        throw ShapeMismatch("soft_update: parameter sets disagree");
    for (size_t i = 0; i < target.entries.size(); ++i) {
        Mat& tm = target.entries[i].second;
        const Mat& om = online.entries[i].second;
        if (target.entries[i].first != online.entries[i].first || !tm.same_shape(om))
            throw ShapeMismatch("soft_update: entry " + target.entries[i].first + " disagrees");
        for (size_t k = 0; k < tm.size(); ++k) tm.v[k] = (1.0 - tau) * tm.v[k] + tau * om.v[k];
    }
}

ReferenceDistribution reference_for(const ScenarioConfig& cfg, const World& w, const GameState& s,
                                    int agent) {
    if (cfg.scenario == Scenario::Pursuit)
        return pursuit_reference(cfg, w.g, w.dmg, s, agent, w.dist);
    return confrontation_reference(cfg, w.g, w.dmg, s, agent, w.dist);
}

TeamEval eval_team(Tape& t, const BoundParams& p, const ScenarioConfig& cfg, const World& w,
                   const GameState& s, Team team) {
    const FeatureMatrix fm = featurize(s, w.dist, w.dmg, cfg, team);
    TeamEval ev;
    ev.h_hat = encode(t, p, fm.values, w.adjacency);
    const int lo = team == Team::Ours ? 0 : cfg.num_ours();
    const int hi = team == Team::Ours ? cfg.num_ours() : cfg.num_agents();
    for (int agent = lo; agent < hi; ++agent) {
        if (!s.alive[agent]) continue;
        AgentEval ae;
        ae.agent = agent;
        ae.node = s.positions[agent];
        ae.candidates = make_candidates(s, legal_actions(cfg, w.g, w.dmg, s, agent));
        ae.h_tilde = decode(t, p, ev.h_hat, ae.node);
        ae.dist = actor_distribution(t, p, ev.h_hat, ae.h_tilde, ae.node, ae.candidates);
        ev.agents.push_back(std::move(ae));
    }
    return ev;
}

CriticInput critic_input_for(const ScenarioConfig& cfg, const World& w, const GameState& s,
                             int agent, const Candidate& action) {
    CriticInput in;
    in.node = s.positions[agent];
    in.neighbor_nodes = w.g.neighbors(in.node);
    const bool ours = team_of(cfg, agent) == Team::Ours;
    const int lo = ours ? cfg.num_ours() : 0;
    const int hi = ours ? cfg.num_agents() : cfg.num_ours();
    for (int j = lo; j < hi; ++j)
        if (s.alive[j]) in.opponent_nodes.push_back(s.positions[j]);
    in.action = action;
    return in;
}

namespace {

int sample_index(const Mat& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (int i = 0; i < probs.cols; ++i) {
        acc += probs.v[i];
        if (u < acc) return i;
    }
    return probs.cols - 1;
}

int argmax_index(const Mat& probs) {
    int best = 0;
    for (int i = 1; i < probs.cols; ++i)
        if (probs.v[i] > probs.v[best]) best = i;
    return best;
}

}  // namespace

std::vector<double> critic_targets(Tape& t, const ScenarioConfig& cfg, const World& w,
                                   const ParameterSet& online, const ParameterSet& target,
                                   const Coefficients& c, bool disable_kl,
                                   const std::vector<const Transition*>& batch, Rng& rng) {
    if (batch.empty()) throw EmptyBatch("critic_targets: empty batch");
    t.reset();
    const BoundParams on = bind_params(t, online);
    const BoundParams tg = bind_params(t, target);
    std::vector<double> ys(batch.size());
    for (size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = *batch[b];
        if (tr.terminal) {
            ys[b] = tr.reward;
            continue;
        }
        const TeamEval ev = eval_team(t, on, cfg, w, tr.s2, Team::Ours);
        double log_pi = 0.0, kl = 0.0;
        std::vector<Ref> h_tildes_t;
        std::vector<CriticInput> inputs;
        Ref h_hat_t = encode(t, tg, featurize(tr.s2, w.dist, w.dmg, cfg, Team::Ours).values,
                             w.adjacency);
        for (const AgentEval& ae : ev.agents) {
            const Mat& probs = t.value(ae.dist);
            const int pick = sample_index(probs, rng);
            log_pi += std::log(probs.v[pick]);
            if (!disable_kl) {
                const ReferenceDistribution ref = reference_for(cfg, w, tr.s2, ae.agent);
                for (size_t a = 0; a < ref.probs.size(); ++a)
                    if (ref.probs[a] > 0.0)
                        kl += ref.probs[a] * (std::log(ref.probs[a]) - std::log(probs.v[a]));
            }
            h_tildes_t.push_back(decode(t, tg, h_hat_t, ae.node));
            inputs.push_back(critic_input_for(cfg, w, tr.s2, ae.agent, ae.candidates[pick]));
        }
        const VdnRefs q1 = critic_q_vdn(t, tg, 1, h_hat_t, h_tildes_t, inputs);
        const VdnRefs q2 = critic_q_vdn(t, tg, 2, h_hat_t, h_tildes_t, inputs);
        const double min_q = std::min(t.scalar_value(q1.joint), t.scalar_value(q2.joint));
        const double beta = disable_kl ? 0.0 : c.beta();
        ys[b] = tr.reward + c.gamma * (min_q - c.alpha() * log_pi - beta * kl);
    }
    return ys;
}

CriticLossRefs build_critic_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg,
                                 const World& w, const std::vector<const Transition*>& batch,
                                 const std::vector<double>& targets) {
    if (batch.empty()) throw EmptyBatch("critic loss: empty batch");
    Ref sum1, sum2;
    for (size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = *batch[b];
        Ref h_hat = encode(t, p, featurize(tr.s, w.dist, w.dmg, cfg, Team::Ours).values,
                           w.adjacency);
        std::vector<Ref> h_tildes;
        std::vector<CriticInput> inputs;
        for (int agent = 0; agent < cfg.num_ours(); ++agent) {
            if (!tr.s.alive[agent]) continue;
            const ActionId act = tr.ours[agent];
            const Candidate cand{act, act.kind == ActionId::Kind::Move
                                          ? act.target
                                          : tr.s.positions[act.target]};
            h_tildes.push_back(decode(t, p, h_hat, tr.s.positions[agent]));
            inputs.push_back(critic_input_for(cfg, w, tr.s, agent, cand));
        }
        const Ref y = t.input(Mat::scalar(-targets[b]));
        for (int head = 1; head <= 2; ++head) {
            const VdnRefs q = critic_q_vdn(t, p, head, h_hat, h_tildes, inputs);
            Ref diff = t.add(q.joint, y);
            Ref term = t.scale(t.mul(diff, diff), 0.5);
            Ref& sum = head == 1 ? sum1 : sum2;
            sum = sum.valid() ? t.add(sum, term) : term;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    CriticLossRefs out;
    out.loss1 = t.scale(sum1, inv);
    out.loss2 = t.scale(sum2, inv);
    out.total = t.add(out.loss1, out.loss2);
    return out;
}

QTables policy_q_tables(Tape& t, const ScenarioConfig& cfg, const World& w,
                        const ParameterSet& ps, const std::vector<const GameState*>& states) {
    t.reset();
    const BoundParams p = bind_params(t, ps);
    QTables qt(states.size());
    for (size_t b = 0; b < states.size(); ++b) {
        const GameState& s = *states[b];
        const TeamEval ev = eval_team(t, p, cfg, w, s, Team::Ours);
        qt[b].resize(ev.agents.size());
        for (size_t i = 0; i < ev.agents.size(); ++i) {
            const AgentEval& ae = ev.agents[i];
            qt[b][i].resize(ae.candidates.size());
            for (size_t a = 0; a < ae.candidates.size(); ++a) {
                const CriticInput in = critic_input_for(cfg, w, s, ae.agent, ae.candidates[a]);
                const double q1 = t.scalar_value(critic_q(t, p, 1, ev.h_hat, ae.h_tilde, in));
                const double q2 = t.scalar_value(critic_q(t, p, 2, ev.h_hat, ae.h_tilde, in));
                qt[b][i][a] = std::min(q1, q2);
            }
        }
    }
    return qt;
}

PolicyLossBuild build_policy_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg,
                                  const World& w, const std::vector<const GameState*>& states,
                                  const QTables& qt, const Coefficients& c, bool disable_kl) {
    if (states.empty()) throw EmptyBatch("policy loss: empty batch");
    const double alpha = c.alpha();
    const double beta = disable_kl ? 0.0 : c.beta();
    Ref sum;
    double ent_acc = 0.0, hbar_acc = 0.0, kl_acc = 0.0;
    long pairs = 0;
    double kl_state_acc = 0.0;
    for (size_t b = 0; b < states.size(); ++b) {
        const GameState& s = *states[b];
        const TeamEval ev = eval_team(t, p, cfg, w, s, Team::Ours);
        double kl_state = 0.0;
        for (size_t i = 0; i < ev.agents.size(); ++i) {
            const AgentEval& ae = ev.agents[i];
            Ref logp = t.log(ae.dist);
            // exact expectation: sum_a pi(a) * (alpha log pi(a) - Qmin(a))
            Mat neg_q(1, static_cast<int>(ae.candidates.size()));
            for (size_t a = 0; a < ae.candidates.size(); ++a) neg_q.v[a] = -qt[b][i][a];
            Ref term = t.sum_all(t.mul(ae.dist, t.add(t.scale(logp, alpha), t.input(neg_q))));
            sum = sum.valid() ? t.add(sum, term) : term;

            const Mat& probs = t.value(ae.dist);
            double h = 0.0;
            for (int a = 0; a < probs.cols; ++a)
                if (probs.v[a] > 0.0) h -= probs.v[a] * std::log(probs.v[a]);
            ent_acc += h;
            hbar_acc += c.target_entropy_factor * std::log(static_cast<double>(probs.cols));
            ++pairs;

            if (!disable_kl) {
                const ReferenceDistribution ref = reference_for(cfg, w, s, ae.agent);
                Mat ref_row = Mat::row(std::vector<double>(ref.probs));
                double ref_const = 0.0;
                for (double r : ref.probs)
                    if (r > 0.0) ref_const += r * std::log(r);
                // KL(ref || pi) = sum ref log ref - sum ref log pi
                Ref kl_ref = t.add(t.input(Mat::scalar(ref_const)),
                                   t.scale(t.sum_all(t.mul(t.input(ref_row), logp)), -1.0));
                sum = t.add(sum, t.scale(kl_ref, beta));
                const double kl_val = t.scalar_value(kl_ref);
                kl_acc += kl_val;
                kl_state += kl_val;
            }
        }
        kl_state_acc += kl_state;
    }
    PolicyLossBuild out;
    out.loss = t.scale(sum, 1.0 / static_cast<double>(states.size()));
    out.stats.entropy = ent_acc / static_cast<double>(pairs);
    out.stats.hbar = hbar_acc / static_cast<double>(pairs);
    out.stats.kl = c.kl_stat_sum ? kl_state_acc / static_cast<double>(states.size())
                                 : kl_acc / static_cast<double>(pairs);
    return out;
}

Ref build_bc_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg, const World& w,
                  const std::vector<const GameState*>& states) {
    if (states.empty()) throw EmptyBatch("bc loss: empty batch");
    Ref sum;
    for (const GameState* sp : states) {
        const TeamEval ev = eval_team(t, p, cfg, w, *sp, Team::Ours);
        for (const AgentEval& ae : ev.agents) {
            const ReferenceDistribution ref = reference_for(cfg, w, *sp, ae.agent);
            const int j = ref.onehot_index();
            Ref picked = j >= 0 ? t.slice_cols(ae.dist, j, j + 1)
                                : t.sum_all(t.mul(t.input(Mat::row(std::vector<double>(ref.probs))),
                                                  ae.dist));
            Ref term = t.scale(t.log(picked), -1.0);
            sum = sum.valid() ? t.add(sum, term) : term;
        }
    }
    return t.scale(sum, 1.0 / static_cast<double>(states.size()));
}

Adam::Adam(const ParameterSet& ps, const std::vector<std::string>& prefixes) {
    for (size_t i = 0; i < ps.entries.size(); ++i) {
        const std::string& name = ps.entries[i].first;
        for (const auto& pre : prefixes) {
            if (name.rfind(pre, 0) == 0) {
                picked_.push_back(static_cast<int>(i));
                m_.emplace_back(ps.entries[i].second.rows, ps.entries[i].second.cols);
                v_.emplace_back(ps.entries[i].second.rows, ps.entries[i].second.cols);
                break;
            }
        }
    }
}

void Adam::step(ParameterSet& ps, const Tape& t, const BoundParams& bound, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t k = 0; k < picked_.size(); ++k) {
        const int i = picked_[k];
        Mat& w = ps.entries[i].second;
        const Mat& g = t.grad(bound.refs[i]);
        for (size_t j = 0; j < w.size(); ++j) {
            m_[k].v[j] = b1 * m_[k].v[j] + (1.0 - b1) * g.v[j];
            v_[k].v[j] = b2 * v_[k].v[j] + (1.0 - b2) * g.v[j] * g.v[j];
            const double mh = m_[k].v[j] / bc1;
            const double vh = v_[k].v[j] / bc2;
            w.v[j] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

Trainer::Trainer(const ScenarioConfig& cfg, const World& w, const NetConfig& net,
                 const Coefficients& coeffs, TrainerMode mode, uint64_t seed, int batch_size,
                 size_t buffer_capacity, bool disable_kl)
    : cfg_(cfg),
      world_(w),
      mode_(mode),
      disable_kl_(disable_kl),
      batch_size_(batch_size),
      coeffs_(coeffs),
      params_([&] {
          Rng init_rng = Rng::stream(seed, 0x9a7a);
          return init_params(net, init_rng, coeffs.alpha(), coeffs.beta());
      }()),
      target_(params_),
      buffer_(buffer_capacity),
      adam_critic_(params_, {"proj_", "enc", "dec_", "critic"}),
      adam_policy_(params_, {"proj_", "enc", "dec_", "ptr_"}),
      rng_(Rng::stream(seed, 0x7241)) {
    params_.set_log_alpha(coeffs_.log_alpha);
    params_.set_log_beta(coeffs_.log_beta);
    target_ = params_;
}

void Trainer::load_params(const ParameterSet& ps) {
    params_ = ps;
    target_ = ps;
    coeffs_.log_alpha = ps.log_alpha();
    coeffs_.log_beta = ps.log_beta();
}

std::vector<ActionId> Trainer::act(const GameState& s, bool greedy, Rng& rng) {
    scratch_.reset();
    const BoundParams p = bind_params(scratch_, params_);
    const TeamEval ev = eval_team(scratch_, p, cfg_, world_, s, Team::Ours);
    std::vector<ActionId> joint(cfg_.num_ours());
    for (int agent = 0; agent < cfg_.num_ours(); ++agent)
        joint[agent] = ActionId::move(s.positions[agent]);  // dead agents NoOp
    for (const AgentEval& ae : ev.agents) {
        const Mat& probs = scratch_.value(ae.dist);
        const int pick = greedy ? argmax_index(probs) : sample_index(probs, rng);
        joint[ae.agent] = ae.candidates[pick].action;
    }
    return joint;
}

TrainMetrics Trainer::train_step() {
    TrainMetrics mm;
    mm.alpha = coeffs_.alpha();
    mm.beta = disable_kl_ ? 0.0 : coeffs_.beta();
    if (mode_ == TrainerMode::Ref) return mm;
    if (buffer_.size() < static_cast<size_t>(batch_size_)) return mm;  // BufferTooSmall: no-op

    const auto batch = buffer_.sample(batch_size_, rng_);
    std::vector<const GameState*> states(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) states[i] = &batch[i]->s;

    if (mode_ == TrainerMode::Bc) {
        tape_.reset();
        const BoundParams p = bind_params(tape_, params_);
        Ref loss = build_bc_loss(tape_, p, cfg_, world_, states);
        mm.policy_loss = tape_.scalar_value(loss);
        tape_.backward(loss);
        adam_policy_.step(params_, tape_, p, coeffs_.lr);
        mm.applied = true;
        return mm;
    }

    // critic update
    const auto ys = critic_targets(scratch_, cfg_, world_, params_, target_, coeffs_, disable_kl_,
                                   batch, rng_);
    {
        tape_.reset();
        const BoundParams p = bind_params(tape_, params_);
        const CriticLossRefs cl = build_critic_loss(tape_, p, cfg_, world_, batch, ys);
        mm.critic1_loss = tape_.scalar_value(cl.loss1);
        mm.critic2_loss = tape_.scalar_value(cl.loss2);
        tape_.backward(cl.total);
        adam_critic_.step(params_, tape_, p, coeffs_.lr);
    }

    // policy update
    const QTables qt = policy_q_tables(scratch_, cfg_, world_, params_, states);
    DualStats stats;
    {
        tape_.reset();
        const BoundParams p = bind_params(tape_, params_);
        const PolicyLossBuild pl = build_policy_loss(tape_, p, cfg_, world_, states, qt, coeffs_,
                                                     disable_kl_);
        mm.policy_loss = tape_.scalar_value(pl.loss);
        stats = pl.stats;
        tape_.backward(pl.loss);
        adam_policy_.step(params_, tape_, p, coeffs_.lr);
    }

    // dual updates: alpha always, beta only in adaptive mode with references
    const bool update_beta = mode_ == TrainerMode::Arac && !disable_kl_;
    coeffs_ = dual_update(stats, coeffs_, true, update_beta);
    params_.set_log_alpha(coeffs_.log_alpha);
    params_.set_log_beta(coeffs_.log_beta);

    soft_update(target_, params_, coeffs_.tau);

    mm.entropy = stats.entropy;
    mm.kl = stats.kl;
    mm.hbar = stats.hbar;
    mm.alpha = coeffs_.alpha();
    mm.beta = disable_kl_ ? 0.0 : coeffs_.beta();
    mm.applied = true;
    return mm;
}

}  // namespace arac
