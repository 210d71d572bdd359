#pragma once

#include <iosfwd>
#include <string>

#include "arac/game.hpp"
#include "arac/nets.hpp"
#include "arac/trainer.hpp"

namespace arac {

// Flat key=value run configuration. Defaults mirror the experiment
// hyperparameter table: Adam, batch 128, buffer 2000, lr 1e-5, max steps
// 128, encoder layers 6, decoder layer 1, 8 heads, entropy target factor
// 0.05, KL target 1.
struct RunConfig {
    ScenarioConfig scenario;

    int embed_dim = 64;
    int encoder_layers = 6;
    int decoder_layers = 1;
    int heads = 8;
    int ff_mult = 4;
    int critic_hidden = 128;

    double lr = 1e-5;
    double coef_lr = -1.0;  // -1: follow lr
    double gamma = 0.99;
    double tau = 0.005;
    double target_entropy_factor = 0.05;
    double target_kl = 1.0;
    double alpha_init = 0.2;
    double beta_init = 1.0;
    bool kl_stat_sum = false;

    std::string map_path;
    std::string mode = "arac";  // arac | brac | bc | ref
    int batch_size = 128;
    int buffer_size = 2000;
    int episodes = 5000;
    int eval_every = 100;
    int eval_episodes = 100;
    int update_every = 1;
    bool disable_kl = false;
    double stop_at_success = 0.0;  // early stop when an eval reaches this, 0 = off
    uint64_t seed = 1;
    std::string out_dir = "run";

    TrainerMode trainer_mode() const;
    Coefficients coefficients() const;
    NetConfig net_config() const;
    std::string canonical() const;
    void set(const std::string& key, const std::string& value);
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::string& path);

}  // namespace arac
