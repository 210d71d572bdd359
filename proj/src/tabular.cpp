#include "arac/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "arac/errors.hpp"

namespace arac {

namespace {
constexpr double kRowTol = 1e-12;
constexpr double kEgObjectiveTol = 1e-12;
constexpr int kEgCap = 100000;
}  // namespace

void TabularMDP::validate() const {
    if (states < 1 || actions < 1) throw ShapeMismatch("mdp: empty state or action space");
    if (gamma < 0.0 || gamma >= 1.0) throw InvalidValue("mdp: gamma must be in [0,1)");
    for (int s = 0; s < states; ++s)
        for (int a = 0; a < actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < states; ++s2) {
                const double x = trans(s, a, s2);
                if (x < 0.0) throw InvalidValue("mdp: negative transition probability");
                sum += x;
            }
            if (std::abs(sum - 1.0) > kRowTol) throw InvalidValue("mdp: transition row not stochastic");
            if (!std::isfinite(reward(s, a))) throw InvalidValue("mdp: non-finite reward");
        }
}

void TabularPolicy::validate() const {
    for (int s = 0; s < states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < actions; ++a) {
            if (at(s, a) < 0.0) throw InvalidValue("policy: negative probability");
            sum += at(s, a);
        }
        if (std::abs(sum - 1.0) > kRowTol) throw InvalidValue("policy: row not stochastic");
    }
}

double RegularizerSpec::omega(const TabularPolicy& pi, int s) const {
    double h = 0.0, kl = 0.0;
    for (int a = 0; a < pi.actions; ++a) {
        const double p = pi.at(s, a);
        if (p > 0.0) h -= p * std::log(p);
        if (beta == 0.0) continue;
        const double rp = ref.at(s, a);
        if (rp > 0.0) {
            if (p <= 0.0) throw InvalidValue("omega: KL undefined, policy lacks support");
            kl += rp * (std::log(rp) - std::log(p));
        }
    }
    return alpha * h - beta * kl;
}

QTable bellman_apply(const QTable& q, const TabularPolicy& pi, const TabularMDP& mdp,
                     const RegularizerSpec& reg) {
    if (static_cast<int>(q.size()) != mdp.states * mdp.actions)
        throw ShapeMismatch("bellman_apply: Q shape disagrees with the MDP");
    // per-state value of the successor under pi, plus the regularizer
    std::vector<double> inner(mdp.states);
    for (int s2 = 0; s2 < mdp.states; ++s2) {
        double ev = 0.0;
        for (int a2 = 0; a2 < mdp.actions; ++a2)
            ev += pi.at(s2, a2) * q[static_cast<size_t>(s2) * mdp.actions + a2];
        inner[s2] = ev + reg.omega(pi, s2);
    }
    QTable out(q.size());
    for (int s = 0; s < mdp.states; ++s)
        for (int a = 0; a < mdp.actions; ++a) {
            double exp_next = 0.0;
            for (int s2 = 0; s2 < mdp.states; ++s2) exp_next += mdp.trans(s, a, s2) * inner[s2];
            out[static_cast<size_t>(s) * mdp.actions + a] = mdp.reward(s, a) + mdp.gamma * exp_next;
        }
    return out;
}

namespace {

// Gaussian elimination with partial pivoting; A is n x n row-major.
VTable solve_linear(std::vector<double> a, VTable b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[static_cast<size_t>(row) * n + col]) >
                std::abs(a[static_cast<size_t>(piv) * n + col]))
                piv = row;
        if (piv != col) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(col) * n + j], a[static_cast<size_t>(piv) * n + j]);
            std::swap(b[col], b[piv]);
        }
        const double d = a[static_cast<size_t>(col) * n + col];
        for (int row = col + 1; row < n; ++row) {
            const double f = a[static_cast<size_t>(row) * n + col] / d;
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j)
                a[static_cast<size_t>(row) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
            b[row] -= f * b[col];
        }
    }
    VTable x(n);
    for (int row = n - 1; row >= 0; --row) {
        double acc = b[row];
        for (int j = row + 1; j < n; ++j) acc -= a[static_cast<size_t>(row) * n + j] * x[j];
        x[row] = acc / a[static_cast<size_t>(row) * n + row];
    }
    return x;
}

}  // namespace

VTable evaluate_policy_exact(const TabularMDP& mdp, const TabularPolicy& pi,
                             const RegularizerSpec& reg) {
    // (I - gamma P_pi) V = r_pi + Omega
    const int n = mdp.states;
    std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
    VTable b(n);
    for (int s = 0; s < n; ++s) {
        double r_pi = 0.0;
        std::vector<double> p_pi(n, 0.0);
        for (int act = 0; act < mdp.actions; ++act) {
            const double w = pi.at(s, act);
            if (w == 0.0) continue;
            r_pi += w * mdp.reward(s, act);
            for (int s2 = 0; s2 < n; ++s2) p_pi[s2] += w * mdp.trans(s, act, s2);
        }
        for (int s2 = 0; s2 < n; ++s2)
            a[static_cast<size_t>(s) * n + s2] = (s == s2 ? 1.0 : 0.0) - mdp.gamma * p_pi[s2];
        b[s] = r_pi + reg.omega(pi, s);
    }
    return solve_linear(std::move(a), std::move(b));
}

QTable q_from_v(const TabularMDP& mdp, const VTable& v) {
    QTable q(static_cast<size_t>(mdp.states) * mdp.actions);
    for (int s = 0; s < mdp.states; ++s)
        for (int a = 0; a < mdp.actions; ++a) {
            double ev = 0.0;
            for (int s2 = 0; s2 < mdp.states; ++s2) ev += mdp.trans(s, a, s2) * v[s2];
            q[static_cast<size_t>(s) * mdp.actions + a] = mdp.reward(s, a) + mdp.gamma * ev;
        }
    return q;
}

double contraction_check(const TabularMDP& mdp, const TabularPolicy& pi,
                         const RegularizerSpec& reg, int trials, Rng& rng) {
    double worst = 0.0;
    const size_t sz = static_cast<size_t>(mdp.states) * mdp.actions;
    for (int t = 0; t < trials; ++t) {
        QTable q1(sz), q2(sz);
        for (auto& x : q1) x = rng.next_double(-10.0, 10.0);
        for (auto& x : q2) x = rng.next_double(-10.0, 10.0);
        double denom = 0.0;
        for (size_t i = 0; i < sz; ++i) denom = std::max(denom, std::abs(q1[i] - q2[i]));
        if (denom == 0.0) continue;  // 0/0 pair, excluded
        const QTable t1 = bellman_apply(q1, pi, mdp, reg);
        const QTable t2 = bellman_apply(q2, pi, mdp, reg);
        double numer = 0.0;
        for (size_t i = 0; i < sz; ++i) numer = std::max(numer, std::abs(t1[i] - t2[i]));
        worst = std::max(worst, numer / denom);
    }
    return worst;
}

namespace {

// objective for one state's simplex problem
double state_objective(const double* q, const double* mu, const double* ref, int actions,
                       double alpha, double beta) {
    double val = 0.0;
    for (int a = 0; a < actions; ++a) {
        val += mu[a] * q[a];
        if (alpha != 0.0 && mu[a] > 0.0) val -= alpha * mu[a] * std::log(mu[a]);
        if (beta != 0.0 && ref[a] > 0.0) val += beta * ref[a] * (std::log(mu[a]) - std::log(ref[a]));
    }
    return val;
}

}  // namespace

TabularPolicy improve_policy(const QTable& q, const TabularMDP& mdp, const RegularizerSpec& reg) {
    if (reg.beta != 0.0 &&
        static_cast<int>(reg.ref.pi.size()) != mdp.states * mdp.actions)
        throw ShapeMismatch("improve_policy: reference policy shape disagrees");
    TabularPolicy out;
    out.states = mdp.states;
    out.actions = mdp.actions;
    out.pi.assign(static_cast<size_t>(mdp.states) * mdp.actions, 0.0);
    const int na = mdp.actions;
    for (int s = 0; s < mdp.states; ++s) {
        const double* qs = q.data() + static_cast<size_t>(s) * na;
        double* mu = out.pi.data() + static_cast<size_t>(s) * na;
        const double* ref = reg.ref.pi.empty() ? nullptr : reg.ref.pi.data() + static_cast<size_t>(s) * na;

        if (reg.alpha == 0.0 && reg.beta == 0.0) {
            // greedy with lowest-index tie-break
            int best = 0;
            for (int a = 1; a < na; ++a)
                if (qs[a] > qs[best]) best = a;
            mu[best] = 1.0;
            continue;
        }
        if (reg.beta == 0.0) {
            // soft-greedy closed form mu(a) prop exp(Q/alpha)
            double mx = qs[0];
            for (int a = 1; a < na; ++a) mx = std::max(mx, qs[a]);
            double sum = 0.0;
            for (int a = 0; a < na; ++a) {
                mu[a] = std::exp((qs[a] - mx) / reg.alpha);
                sum += mu[a];
            }
            for (int a = 0; a < na; ++a) mu[a] /= sum;
            continue;
        }

        // exponentiated gradient ascent from uniform
        double qmax = 0.0;
        for (int a = 0; a < na; ++a) qmax = std::max(qmax, std::abs(qs[a]));
        const double step = 0.5 / (qmax + reg.alpha + reg.beta);
        for (int a = 0; a < na; ++a) mu[a] = 1.0 / na;
        std::vector<double> grad(na);
        double obj = state_objective(qs, mu, ref, na, reg.alpha, reg.beta);
        bool converged = false;
        for (int it = 0; it < kEgCap; ++it) {
            double gmax = -HUGE_VAL;
            for (int a = 0; a < na; ++a) {
                grad[a] = qs[a];
                if (reg.alpha != 0.0) grad[a] -= reg.alpha * (1.0 + std::log(mu[a]));
                if (ref[a] > 0.0) grad[a] += reg.beta * ref[a] / mu[a];
                gmax = std::max(gmax, grad[a]);
            }
            double sum = 0.0;
            for (int a = 0; a < na; ++a) {
                mu[a] *= std::exp(step * (grad[a] - gmax));  // shift keeps exp bounded
                sum += mu[a];
            }
            for (int a = 0; a < na; ++a) mu[a] /= sum;
            const double next = state_objective(qs, mu, ref, na, reg.alpha, reg.beta);
            if (std::abs(next - obj) < kEgObjectiveTol) {
                converged = true;
                break;
            }
            obj = next;
        }
        if (!converged)
            throw NonConvergence("improve_policy: state " + std::to_string(s) +
                                 " hit the iteration cap");
    }
    return out;
}

PolicyIterationResult policy_iteration(const TabularMDP& mdp, const RegularizerSpec& reg,
                                       int max_iterations) {
    mdp.validate();
    PolicyIterationResult res;
    TabularPolicy pi;
    pi.states = mdp.states;
    pi.actions = mdp.actions;
    pi.pi.assign(static_cast<size_t>(mdp.states) * mdp.actions, 1.0 / mdp.actions);
    VTable v = evaluate_policy_exact(mdp, pi, reg);
    res.trace.push_back(v);
    for (int k = 0; k < max_iterations; ++k) {
        pi = improve_policy(q_from_v(mdp, v), mdp, reg);
        VTable v_next = evaluate_policy_exact(mdp, pi, reg);
        res.trace.push_back(v_next);
        double delta = 0.0;
        for (int s = 0; s < mdp.states; ++s) delta = std::max(delta, std::abs(v_next[s] - v[s]));
        v = std::move(v_next);
        if (delta < 1e-9) {
            res.policy = std::move(pi);
            res.values = std::move(v);
            res.iterations = k + 1;
            return res;
        }
    }
    throw NonConvergence("policy_iteration: no fixed point within " +
                         std::to_string(max_iterations) + " iterations");
}

TabularMDP random_mdp(int states, int actions, double gamma, Rng& rng) {
    TabularMDP mdp;
    mdp.states = states;
    mdp.actions = actions;
    mdp.gamma = gamma;
    mdp.p.resize(static_cast<size_t>(states) * actions * states);
    mdp.r.resize(static_cast<size_t>(states) * actions);
    for (int s = 0; s < states; ++s)
        for (int a = 0; a < actions; ++a) {
            // Dirichlet(1) row via normalized exponentials
            double sum = 0.0;
            for (int s2 = 0; s2 < states; ++s2) {
                const double e = -std::log(1.0 - rng.next_double());
                mdp.p[(static_cast<size_t>(s) * actions + a) * states + s2] = e;
                sum += e;
            }
            for (int s2 = 0; s2 < states; ++s2)
                mdp.p[(static_cast<size_t>(s) * actions + a) * states + s2] /= sum;
            mdp.r[static_cast<size_t>(s) * actions + a] = rng.next_double(-1.0, 1.0);
        }
    return mdp;
}

TabularPolicy random_policy(int states, int actions, Rng& rng) {
    TabularPolicy pi;
    pi.states = states;
    pi.actions = actions;
    pi.pi.resize(static_cast<size_t>(states) * actions);
    for (int s = 0; s < states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < actions; ++a) {
            const double e = -std::log(1.0 - rng.next_double());
            pi.at(s, a) = e;
            sum += e;
        }
        for (int a = 0; a < actions; ++a) pi.at(s, a) /= sum;
    }
    return pi;
}

std::string CertificateReport::text() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "certificate seed=%llu instances=%d\n"
                  "  contraction: max ratio %.12g (%s)\n"
                  "  improvement: min margin %.12g (%s)\n"
                  "  monotone trace: max violation %.12g (%s)\n"
                  "  policy iteration: max iterations %d\n",
                  static_cast<unsigned long long>(seed), instances, max_contraction_ratio,
                  contraction_ok ? "ok" : "FAIL", min_improvement_margin,
                  improvement_ok ? "ok" : "FAIL", max_monotonicity_violation,
                  monotone_ok ? "ok" : "FAIL", max_iterations);
    return buf;
}

CertificateReport certify_theorems(int instances, int max_states, int max_actions, double gamma,
                                   double alpha, double beta, int contraction_trials,
                                   uint64_t seed) {
    CertificateReport rep;
    rep.seed = seed;
    rep.instances = instances;
    rep.min_improvement_margin = HUGE_VAL;
    for (int i = 0; i < instances; ++i) {
        Rng rng = Rng::stream(seed, static_cast<uint64_t>(i));
        const int ns = 2 + rng.next_int(max_states - 1);
        const int na = 2 + rng.next_int(max_actions - 1);
        const TabularMDP mdp = random_mdp(ns, na, gamma, rng);
        const TabularPolicy pi = random_policy(ns, na, rng);
        RegularizerSpec reg;
        reg.alpha = alpha;
        reg.beta = beta;
        reg.ref = random_policy(ns, na, rng);

        rep.max_contraction_ratio =
            std::max(rep.max_contraction_ratio, contraction_check(mdp, pi, reg, contraction_trials, rng));

        // Theorem 2 margin: min_s V^{pi'}(s) - V^{pi}(s)
        const VTable v_pi = evaluate_policy_exact(mdp, pi, reg);
        const TabularPolicy improved = improve_policy(q_from_v(mdp, v_pi), mdp, reg);
        const VTable v_improved = evaluate_policy_exact(mdp, improved, reg);
        for (int s = 0; s < ns; ++s)
            rep.min_improvement_margin = std::min(rep.min_improvement_margin, v_improved[s] - v_pi[s]);

        const PolicyIterationResult pit = policy_iteration(mdp, reg);
        rep.max_iterations = std::max(rep.max_iterations, pit.iterations);
        for (size_t k = 1; k < pit.trace.size(); ++k)
            for (int s = 0; s < ns; ++s)
                rep.max_monotonicity_violation = std::max(
                    rep.max_monotonicity_violation, pit.trace[k - 1][s] - pit.trace[k][s]);
    }
    rep.contraction_ok = rep.max_contraction_ratio <= gamma + 1e-9;
    rep.improvement_ok = rep.min_improvement_margin >= -1e-9;
    rep.monotone_ok = rep.max_monotonicity_violation <= 1e-9;
    return rep;
}

}  // namespace arac
