#include "arac/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "arac/errors.hpp"

namespace arac {

TrainerMode RunConfig::trainer_mode() const {
    if (mode == "arac") return TrainerMode::Arac;
    if (mode == "brac") return TrainerMode::Brac;
    if (mode == "bc") return TrainerMode::Bc;
    if (mode == "ref") return TrainerMode::Ref;
    throw ConfigError("unknown mode: " + mode);
}

Coefficients RunConfig::coefficients() const {
    Coefficients c;
    c.log_alpha = std::log(alpha_init);
    c.log_beta = std::log(beta_init);
    c.target_entropy_factor = target_entropy_factor;
    c.target_kl = target_kl;
    c.tau = tau;
    c.gamma = gamma;
    c.lr = lr;
    c.coef_lr = coef_lr < 0.0 ? lr : coef_lr;
    c.kl_stat_sum = kl_stat_sum;
    return c;
}

NetConfig RunConfig::net_config() const {
    NetConfig n;
    n.feature_width = scenario.feature_width();
    n.embed_dim = embed_dim;
    n.encoder_layers = encoder_layers;
    n.decoder_layers = decoder_layers;
    n.heads = heads;
    n.ff_mult = ff_mult;
    n.critic_hidden = critic_hidden;
    return n;
}

namespace {
std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os << "scenario=" << (scenario.scenario == Scenario::Pursuit ? "pursuit" : "confrontation")
       << "\n";
    os << "team_size=" << scenario.team_size << "\n";
    os << "initial_hp=" << scenario.initial_hp << "\n";
    os << "attack_range=" << scenario.attack_range << "\n";
    os << "base_damage=" << scenario.base_damage << "\n";
    os << "max_steps=" << scenario.max_steps << "\n";
    os << "r_capture=" << fmt_double(scenario.r_capture) << "\n";
    os << "r_kill=" << fmt_double(scenario.r_kill) << "\n";
    os << "r_all_kill=" << fmt_double(scenario.r_all_kill) << "\n";
    os << "optimizer=adam\n";
    os << "embed_dim=" << embed_dim << "\n";
    os << "encoder_layers=" << encoder_layers << "\n";
    os << "decoder_layers=" << decoder_layers << "\n";
    os << "heads=" << heads << "\n";
    os << "ff_mult=" << ff_mult << "\n";
    os << "critic_hidden=" << critic_hidden << "\n";
    os << "lr=" << fmt_double(lr) << "\n";
    os << "coef_lr=" << fmt_double(coef_lr) << "\n";
    os << "gamma=" << fmt_double(gamma) << "\n";
    os << "tau=" << fmt_double(tau) << "\n";
    os << "target_entropy_factor=" << fmt_double(target_entropy_factor) << "\n";
    os << "target_kl=" << fmt_double(target_kl) << "\n";
    os << "alpha_init=" << fmt_double(alpha_init) << "\n";
    os << "beta_init=" << fmt_double(beta_init) << "\n";
    os << "kl_stat=" << (kl_stat_sum ? "sum" : "mean") << "\n";
    os << "map=" << map_path << "\n";
    os << "mode=" << mode << "\n";
    os << "batch_size=" << batch_size << "\n";
    os << "buffer_size=" << buffer_size << "\n";
    os << "episodes=" << episodes << "\n";
    os << "eval_every=" << eval_every << "\n";
    os << "eval_episodes=" << eval_episodes << "\n";
    os << "update_every=" << update_every << "\n";
    os << "disable_kl=" << (disable_kl ? 1 : 0) << "\n";
    os << "stop_at_success=" << fmt_double(stop_at_success) << "\n";
    os << "seed=" << seed << "\n";
    os << "out_dir=" << out_dir << "\n";
    return os.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto as_int = [&] {
        try {
            return std::stoi(value);
        } catch (...) {
            throw ConfigError("bad integer for " + key + ": " + value);
        }
    };
    auto as_double = [&] {
        try {
            return std::stod(value);
        } catch (...) {
            throw ConfigError("bad number for " + key + ": " + value);
        }
    };
    auto as_bool = [&] {
        if (value == "1" || value == "true") return true;
        if (value == "0" || value == "false") return false;
        throw ConfigError("bad boolean for " + key + ": " + value);
    };
    if (key == "scenario") {
        if (value == "pursuit")
            scenario.scenario = Scenario::Pursuit;
        else if (value == "confrontation")
            scenario.scenario = Scenario::Confrontation;
        else
            throw ConfigError("unknown scenario: " + value);
    } else if (key == "team_size")
        scenario.team_size = as_int();
    else if (key == "initial_hp")
        scenario.initial_hp = as_int();
    else if (key == "attack_range")
        scenario.attack_range = as_int();
    else if (key == "base_damage")
        scenario.base_damage = as_int();
    else if (key == "max_steps")
        scenario.max_steps = as_int();
    else if (key == "r_capture")
        scenario.r_capture = as_double();
    else if (key == "r_kill")
        scenario.r_kill = as_double();
    else if (key == "r_all_kill")
        scenario.r_all_kill = as_double();
    else if (key == "optimizer") {
        if (value != "adam") throw ConfigError("only the adam optimizer is supported");
    } else if (key == "embed_dim")
        embed_dim = as_int();
    else if (key == "encoder_layers")
        encoder_layers = as_int();
    else if (key == "decoder_layers")
        decoder_layers = as_int();
    else if (key == "heads")
        heads = as_int();
    else if (key == "ff_mult")
        ff_mult = as_int();
    else if (key == "critic_hidden")
        critic_hidden = as_int();
    else if (key == "lr")
        lr = as_double();
    else if (key == "coef_lr")
        coef_lr = as_double();
    else if (key == "gamma")
        gamma = as_double();
    else if (key == "tau")
        tau = as_double();
    else if (key == "target_entropy_factor")
        target_entropy_factor = as_double();
    else if (key == "target_kl")
        target_kl = as_double();
    else if (key == "alpha_init")
        alpha_init = as_double();
    else if (key == "beta_init")
        beta_init = as_double();
    else if (key == "kl_stat") {
        if (value == "sum")
            kl_stat_sum = true;
        else if (value == "mean")
            kl_stat_sum = false;
        else
            throw ConfigError("kl_stat must be mean or sum");
    } else if (key == "map")
        map_path = value;
    else if (key == "mode")
        mode = value;
    else if (key == "batch_size")
        batch_size = as_int();
    else if (key == "buffer_size")
        buffer_size = as_int();
    else if (key == "episodes")
        episodes = as_int();
    else if (key == "eval_every")
        eval_every = as_int();
    else if (key == "eval_episodes")
        eval_episodes = as_int();
    else if (key == "update_every")
        update_every = as_int();
    else if (key == "disable_kl")
        disable_kl = as_bool();
    else if (key == "stop_at_success")
        stop_at_success = as_double();
    else if (key == "seed")
        seed = static_cast<uint64_t>(std::stoull(value));
    else if (key == "out_dir")
        out_dir = value;
    else
        throw ConfigError("unknown config key: " + key);
}

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value at line " + std::to_string(lineno));
        cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    return parse_run_config(f);
}

}  // namespace arac
