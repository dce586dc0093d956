#include "dnt/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace dnt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

struct Binder {
    std::map<std::string, std::function<void(const std::string&, std::size_t)>> setters;

    template <typename T>
    void bind(const std::string& key, T* target) {
        setters[key] = [key, target](const std::string& raw, std::size_t line_no) {
            auto fail = [&] {
                throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + raw +
                                  "' for key '" + key + "'");
            };
            if constexpr (std::is_same_v<T, std::string>) {
                *target = raw;
            } else if constexpr (std::is_same_v<T, double>) {
                double v{};
                auto r = std::from_chars(raw.data(), raw.data() + raw.size(), v);
                if (r.ec != std::errc() || r.ptr != raw.data() + raw.size()) fail();
                *target = v;
            } else {
                long long v{};
                auto r = std::from_chars(raw.data(), raw.data() + raw.size(), v);
                if (r.ec != std::errc() || r.ptr != raw.data() + raw.size()) fail();
                *target = static_cast<T>(v);
            }
        };
    }

    void set(const std::string& section, const std::string& key, const std::string& value,
             std::size_t line_no) {
        auto it = setters.find(section + "." + key);
        if (it == setters.end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key +
                              "' in section [" + section + "]");
        it->second(value, line_no);
    }
};

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");

    ExperimentConfig cfg;
    Binder b;
    b.bind("experiment.seed", &cfg.seed);
    b.bind("experiment.out_dir", &cfg.out_dir);

    b.bind("network.rows", &cfg.grid_rows);
    b.bind("network.cols", &cfg.grid_cols);
    b.bind("network.horizon", &cfg.horizon);
    b.bind("network.traffic_csv", &cfg.traffic_csv);
    b.bind("network.base_load", &cfg.profile.base_load);
    b.bind("network.base_jitter", &cfg.profile.base_jitter);
    b.bind("network.amplitude", &cfg.profile.amplitude);
    b.bind("network.phase_jitter", &cfg.profile.phase_jitter);
    b.bind("network.noise_scale", &cfg.profile.noise_scale);
    b.bind("network.period_steps", &cfg.profile.period_steps);
    b.bind("network.step_minutes", &cfg.profile.step_minutes);

    b.bind("clustering.k", &cfg.k);
    b.bind("clustering.recluster_period", &cfg.recluster_period);

    b.bind("forecaster.window", &cfg.window);
    b.bind("forecaster.learning_rate", &cfg.learning_rate);
    b.bind("forecaster.epochs", &cfg.epochs);

    b.bind("fedsync.vtwin_rounds", &cfg.vtwin_rounds);
    b.bind("fedsync.htwin_batches", &cfg.htwin_batches);
    b.bind("fedsync.htwin_batch_size", &cfg.htwin_batch_size);
    b.bind("fedsync.rule", &cfg.rule);
    b.bind("fedsync.tau", &cfg.tau);
    b.bind("fedsync.beta", &cfg.beta);
    b.bind("fedsync.root_frac", &cfg.root_frac);
    b.bind("fedsync.maint_window", &cfg.maint_window);
    b.bind("fedsync.eval_window", &cfg.eval_window);
    b.bind("fedsync.train_frac", &cfg.train_frac);
    b.bind("fedsync.maint_frac", &cfg.maint_frac);

    b.bind("attack.grid_rows", &cfg.attack_grid_rows);
    b.bind("attack.grid_cols", &cfg.attack_grid_cols);
    b.bind("attack.vtwin_rounds", &cfg.attack_vtwin_rounds);
    b.bind("attack.htwin_batches", &cfg.attack_htwin_batches);
    b.bind("attack.mpaf_n_fake", &cfg.mpaf_n_fake);
    b.bind("attack.tpi_n_fake", &cfg.tpi_n_fake);
    b.bind("attack.lambda", &cfg.lambda);
    b.bind("attack.clip_c", &cfg.clip_c);
    b.bind("attack.stagger_gamma", &cfg.stagger_gamma);

    b.bind("caching.n_dual", &cfg.cache.n_dual);
    b.bind("caching.catalog_size", &cfg.cache.catalog_size);
    b.bind("caching.zipf_alpha", &cfg.cache.zipf_alpha);
    b.bind("caching.drift_steps", &cfg.cache.drift_steps);
    b.bind("caching.theta", &cfg.cache.theta);
    b.bind("caching.rho", &cfg.cache.rho);
    b.bind("caching.load_window", &cfg.cache.load_window);
    b.bind("caching.count_window", &cfg.cache.count_window);
    b.bind("caching.twin_window", &cfg.cache.twin_window);
    b.bind("caching.rare_rate", &cfg.cache.rare_rate);
    b.bind("caching.episodes", &cfg.cache.episodes);
    b.bind("caching.episode_steps", &cfg.cache.episode_steps);
    b.bind("caching.eval_steps", &cfg.cache.eval_steps);
    b.bind("caching.alpha", &cfg.cache.alpha);
    b.bind("caching.gamma", &cfg.cache.gamma);
    b.bind("caching.epsilon", &cfg.cache.epsilon);

    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        b.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
    }

    if (!cfg.traffic_csv.empty() && !std::filesystem::exists(cfg.traffic_csv))
        throw ConfigError("config: traffic_csv path '" + cfg.traffic_csv + "' does not exist");
    cfg.cache.seed = cfg.seed;
    return cfg;
}

}  // namespace dnt
