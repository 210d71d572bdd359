#include "arac/nets.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "arac/errors.hpp"

namespace arac {

void NetConfig::validate() const {
    if (feature_width < 1) throw ConfigError("feature width must be positive");
    if (embed_dim < 1 || encoder_layers < 1 || heads < 1 || ff_mult < 1 || critic_hidden < 1)
        throw ConfigError("network dimensions must be positive");
    if (embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
    if (decoder_layers != 1) throw ConfigError("decoder_layers must be 1");
}

std::string NetConfig::canonical() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "f=%d;d=%d;L=%d;dec=%d;heads=%d;ff=%d;hidden=%d",
                  feature_width, embed_dim, encoder_layers, decoder_layers, heads, ff_mult,
                  critic_hidden);
    return buf;
}

Mat& ParameterSet::find(const std::string& name) {
    for (auto& [n, m] : entries)
        if (n == name) return m;
    throw ConfigError("unknown parameter: " + name);
}

const Mat& ParameterSet::find(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->find(name);
}

namespace {

Mat uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    Mat m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : m.v) x = rng.next_double(-bound, bound);
    return m;
}

}  // namespace

ParameterSet init_params(const NetConfig& cfg, Rng& rng, double alpha_init, double beta_init) {
    cfg.validate();
    ParameterSet ps;
    ps.net = cfg;
    const int f = cfg.feature_width, d = cfg.embed_dim, ff = cfg.ff_mult * cfg.embed_dim;
    auto put = [&](const std::string& name, Mat m) { ps.entries.emplace_back(name, std::move(m)); };

    put("proj_w", uniform_init(f, d, f, rng));
    put("proj_b", uniform_init(1, d, f, rng));
    for (int l = 0; l < cfg.encoder_layers; ++l) {
        const std::string pre = "enc" + std::to_string(l) + "_";
        put(pre + "wq", uniform_init(d, d, d, rng));
        put(pre + "wk", uniform_init(d, d, d, rng));
        put(pre + "wv", uniform_init(d, d, d, rng));
        put(pre + "ln1_g", Mat(1, d, 1.0));
        put(pre + "ln1_b", Mat(1, d, 0.0));
        put(pre + "ff_w1", uniform_init(d, ff, d, rng));
        put(pre + "ff_b1", uniform_init(1, ff, d, rng));
        put(pre + "ff_w2", uniform_init(ff, d, ff, rng));
        put(pre + "ff_b2", uniform_init(1, d, ff, rng));
        put(pre + "ln2_g", Mat(1, d, 1.0));
        put(pre + "ln2_b", Mat(1, d, 0.0));
    }
    put("dec_wq", uniform_init(d, d, d, rng));
    put("dec_wk", uniform_init(d, d, d, rng));
    put("dec_wv", uniform_init(d, d, d, rng));
    put("ptr_wq", uniform_init(2 * d, d, 2 * d, rng));
    put("ptr_wk", uniform_init(d + 2, d, d + 2, rng));
    const int ci = 5 * d + 2;
    for (int j = 1; j <= 2; ++j) {
        const std::string pre = "critic" + std::to_string(j) + "_";
        put(pre + "w1", uniform_init(ci, cfg.critic_hidden, ci, rng));
        put(pre + "b1", uniform_init(1, cfg.critic_hidden, ci, rng));
        put(pre + "w2", uniform_init(cfg.critic_hidden, 1, cfg.critic_hidden, rng));
        put(pre + "b2", uniform_init(1, 1, cfg.critic_hidden, rng));
    }
    put("log_alpha", Mat::scalar(std::log(alpha_init)));
    put("log_beta", Mat::scalar(std::log(beta_init)));
    return ps;
}

Ref BoundParams::of(const std::string& name) const {
    for (size_t i = 0; i < set->entries.size(); ++i)
        if (set->entries[i].first == name) return refs[i];
    throw ConfigError("unknown parameter: " + name);
}

BoundParams bind_params(Tape& t, const ParameterSet& ps) {
    BoundParams b;
    b.set = &ps;
    b.refs.reserve(ps.entries.size());
    for (const auto& [name, m] : ps.entries) b.refs.push_back(t.input(m));
    return b;
}

namespace {

// multi-head attention over already-projected q/k/v, one masked_attention
// per head, heads concatenated back to width d
Ref multihead(Tape& t, Ref q, Ref k, Ref v, const BoolMat* mask, int heads) {
    const int d = t.value(q).cols;
    const int dh = d / heads;
    std::vector<Ref> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Ref qh = t.slice_cols(q, h * dh, (h + 1) * dh);
        Ref kh = t.slice_cols(k, h * dh, (h + 1) * dh);
        Ref vh = t.slice_cols(v, h * dh, (h + 1) * dh);
        outs.push_back(masked_attention(t, qh, kh, vh, mask).output);
    }
    return heads == 1 ? outs[0] : t.concat_cols(outs);
}

}  // namespace

Ref encode(Tape& t, const BoundParams& p, const Mat& features, const BoolMat& adjacency) {
    const NetConfig& nc = p.set->net;
    if (features.cols != nc.feature_width)
        throw ShapeMismatch("encode: feature width " + std::to_string(features.cols) +
                            ", network expects " + std::to_string(nc.feature_width));
    if (adjacency.rows != features.rows || adjacency.cols != features.rows)
        throw ShapeMismatch("encode: adjacency shape disagrees with features");
    Ref h = t.add_row(t.matmul(t.input(features), p.of("proj_w")), p.of("proj_b"));
    for (int l = 0; l < nc.encoder_layers; ++l) {
        const std::string pre = "enc" + std::to_string(l) + "_";
        Ref q = t.matmul(h, p.of(pre + "wq"));
        Ref k = t.matmul(h, p.of(pre + "wk"));
        Ref v = t.matmul(h, p.of(pre + "wv"));
        Ref attn = multihead(t, q, k, v, &adjacency, nc.heads);
        h = t.layer_norm_rows(t.add(h, attn), p.of(pre + "ln1_g"), p.of(pre + "ln1_b"));
        Ref ff = t.add_row(
            t.matmul(t.relu(t.add_row(t.matmul(h, p.of(pre + "ff_w1")), p.of(pre + "ff_b1"))),
                     p.of(pre + "ff_w2")),
            p.of(pre + "ff_b2"));
        h = t.layer_norm_rows(t.add(h, ff), p.of(pre + "ln2_g"), p.of(pre + "ln2_b"));
    }
    return h;
}

Ref decode(Tape& t, const BoundParams& p, Ref h_hat, int c) {
    const Mat& hv = t.value(h_hat);
    if (c < 0 || c >= hv.rows) throw NodeOutOfRange("decode: node " + std::to_string(c));
    Ref hc = t.gather_rows(h_hat, {c});
    Ref q = t.matmul(hc, p.of("dec_wq"));
    Ref k = t.matmul(h_hat, p.of("dec_wk"));
    Ref v = t.matmul(h_hat, p.of("dec_wv"));
    return multihead(t, q, k, v, nullptr, p.set->net.heads);
}

std::vector<Candidate> make_candidates(const GameState& s, const std::vector<ActionId>& legal) {
    std::vector<Candidate> cands;
    cands.reserve(legal.size());
    for (const ActionId& a : legal) {
        const int key =
            a.kind == ActionId::Kind::Move ? a.target : s.positions[a.target];
        cands.push_back({a, key});
    }
    return cands;
}

Ref actor_distribution(Tape& t, const BoundParams& p, Ref h_hat, Ref h_tilde, int c,
                       const std::vector<Candidate>& candidates) {
    if (candidates.empty()) throw EmptyCandidates("actor: no candidate actions");
    const int d = p.set->net.embed_dim;
    Ref hc = t.gather_rows(h_hat, {c});
    Ref q = t.matmul(t.concat_cols({h_tilde, hc}), p.of("ptr_wq"));  // 1 x d

    std::vector<int> key_nodes(candidates.size());
    Mat kinds(static_cast<int>(candidates.size()), 2, 0.0);
    for (size_t i = 0; i < candidates.size(); ++i) {
        key_nodes[i] = candidates[i].key_node;
        kinds.at(static_cast<int>(i),
                 candidates[i].action.kind == ActionId::Kind::Move ? 0 : 1) = 1.0;
    }
    Ref key_in = t.concat_cols({t.gather_rows(h_hat, key_nodes), t.input(kinds)});
    Ref keys = t.matmul(key_in, p.of("ptr_wk"));  // |A| x d
    Ref scores = t.scale(t.matmul(q, keys, false, true), 1.0 / std::sqrt(static_cast<double>(d)));
    return t.masked_softmax_rows(scores, nullptr);  // 1 x |A|
}

Ref critic_q(Tape& t, const BoundParams& p, int head, Ref h_hat, Ref h_tilde,
             const CriticInput& in) {
    const int d = p.set->net.embed_dim;
    const std::string pre = "critic" + std::to_string(head) + "_";
    Ref hc = t.gather_rows(h_hat, {in.node});
    Ref nei = in.neighbor_nodes.empty()
                  ? t.input(Mat(1, d, 0.0))
                  : t.mean_rows(t.gather_rows(h_hat, in.neighbor_nodes));
    Ref opp = in.opponent_nodes.empty()
                  ? t.input(Mat(1, d, 0.0))
                  : t.mean_rows(t.gather_rows(h_hat, in.opponent_nodes));
    Ref act = t.gather_rows(h_hat, {in.action.key_node});
    Mat kind(1, 2, 0.0);
    kind.v[in.action.action.kind == ActionId::Kind::Move ? 0 : 1] = 1.0;
    Ref x = t.concat_cols({h_tilde, hc, nei, opp, act, t.input(kind)});
    Ref h1 = t.relu(t.add_row(t.matmul(x, p.of(pre + "w1")), p.of(pre + "b1")));
    return t.add_row(t.matmul(h1, p.of(pre + "w2")), p.of(pre + "b2"));  // 1 x 1
}

VdnRefs critic_q_vdn(Tape& t, const BoundParams& p, int head, Ref h_hat,
                     const std::vector<Ref>& h_tildes, const std::vector<CriticInput>& inputs) {
    if (h_tildes.size() != inputs.size() || inputs.empty())
        throw ShapeMismatch("critic_q_vdn: need one context and action per agent");
    VdnRefs out;
    out.per_agent.reserve(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i)
        out.per_agent.push_back(critic_q(t, p, head, h_hat, h_tildes[i], inputs[i]));
    out.joint = out.per_agent[0];
    for (size_t i = 1; i < out.per_agent.size(); ++i) out.joint = t.add(out.joint, out.per_agent[i]);
    return out;
}

uint64_t params_digest(const ScenarioConfig& scen, const NetConfig& net) {
    const std::string s = scen.canonical() + "|" + net.canonical();
    return fnv1a64(s.data(), s.size());
}

namespace {
constexpr char kMagic[8] = {'A', 'R', 'A', 'C', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& f, const T& x) {
    f.write(reinterpret_cast<const char*>(&x), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& f, T& x) {
    f.read(reinterpret_cast<char*>(&x), sizeof(T));
}
}  // namespace

void save_checkpoint(const ParameterSet& ps, uint64_t digest, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write checkpoint: " + path);
    f.write(kMagic, sizeof(kMagic));
    write_pod(f, static_cast<uint32_t>(1));
    write_pod(f, digest);
    const NetConfig& n = ps.net;
    for (int v : {n.feature_width, n.embed_dim, n.encoder_layers, n.decoder_layers, n.heads,
                  n.ff_mult, n.critic_hidden})
        write_pod(f, static_cast<int32_t>(v));
    write_pod(f, static_cast<uint32_t>(ps.entries.size()));
    for (const auto& [name, m] : ps.entries) {
        write_pod(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(f, static_cast<int32_t>(m.rows));
        write_pod(f, static_cast<int32_t>(m.cols));
        f.write(reinterpret_cast<const char*>(m.v.data()),
                static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    }
    if (!f) throw ConfigError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IncompatibleCheckpoint("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IncompatibleCheckpoint("bad checkpoint magic: " + path);
    uint32_t version = 0;
    read_pod(f, version);
    if (version != 1) throw IncompatibleCheckpoint("unsupported checkpoint version");
    Checkpoint ck;
    read_pod(f, ck.digest);
    int32_t dims[7];
    for (auto& x : dims) read_pod(f, x);
    ck.params.net = NetConfig{dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6]};
    uint32_t count = 0;
    read_pod(f, count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = 0;
        read_pod(f, name_len);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        int32_t rows = 0, cols = 0;
        read_pod(f, rows);
        read_pod(f, cols);
        Mat m(rows, cols);
        f.read(reinterpret_cast<char*>(m.v.data()),
               static_cast<std::streamsize>(m.v.size() * sizeof(double)));
        ck.params.entries.emplace_back(std::move(name), std::move(m));
    }
    if (!f) throw IncompatibleCheckpoint("truncated checkpoint: " + path);
    return ck;
}

}  // namespace arac
