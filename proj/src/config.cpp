#include "ghbs/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ghbs {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KeyValue {
    std::string value;
    int line = 0;
};

std::map<std::string, KeyValue> tokenize(const std::string& text, const std::string& name) {
    std::map<std::string, KeyValue> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << name << ":" << lineno << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty()) {
            std::ostringstream os;
            os << name << ":" << lineno << ": empty key or value";
            throw ConfigError(os.str());
        }
        if (kv.count(key)) {
            std::ostringstream os;
            os << name << ":" << lineno << ": duplicate key '" << key << "'";
            throw ConfigError(os.str());
        }
        kv[key] = {val, lineno};
    }
    return kv;
}

class Reader {
public:
    Reader(std::map<std::string, KeyValue> kv, std::string name)
        : kv_(std::move(kv)), name_(std::move(name)) {}

    void take_double(const std::string& key, double& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        try {
            std::size_t pos = 0;
            out = std::stod(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(it->second.line, key, "not a number");
        }
        kv_.erase(it);
    }

    void take_long(const std::string& key, long& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        try {
            std::size_t pos = 0;
            out = std::stol(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(it->second.line, key, "not an integer");
        }
        kv_.erase(it);
    }

    void take_int(const std::string& key, int& out) {
        long v = out;
        take_long(key, v);
        out = int(v);
    }

    void take_u64(const std::string& key, std::uint64_t& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        try {
            std::size_t pos = 0;
            out = std::stoull(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(it->second.line, key, "not an unsigned integer");
        }
        kv_.erase(it);
    }

    void take_vec8(const std::string& key, Eigen::VectorXd& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        std::istringstream is(it->second.value);
        Eigen::VectorXd v(kParamDim);
        for (int i = 0; i < kParamDim; ++i) {
            if (!(is >> v[i])) fail(it->second.line, key, "expected 8 numbers");
        }
        double extra;
        if (is >> extra) fail(it->second.line, key, "expected exactly 8 numbers");
        out = v;
        kv_.erase(it);
    }

    void finish() const {
        if (!kv_.empty()) {
            const auto& [key, val] = *kv_.begin();
            std::ostringstream os;
            os << name_ << ":" << val.line << ": unknown key '" << key << "'";
            throw ConfigError(os.str());
        }
    }

private:
    [[noreturn]] void fail(int line, const std::string& key, const std::string& why) const {
        std::ostringstream os;
        os << name_ << ":" << line << ": key '" << key << "': " << why;
        throw ConfigError(os.str());
    }

    std::map<std::string, KeyValue> kv_;
    std::string name_;
};

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& name) {
    Reader r(tokenize(text, name), name);
    PipelineConfig c;

    r.take_u64("seed", c.seed);
    r.take_int("workers", c.workers);

    r.take_double("elastic.E_s", c.elastic.E_s);
    r.take_double("elastic.E_h", c.elastic.E_h);
    r.take_double("elastic.m", c.elastic.m);
    r.take_double("elastic.nu", c.elastic.nu);
    r.take_double("elastic.S_h", c.elastic.S_h);

    r.take_double("schedule.sigma_c", c.schedule.sigma_c);
    r.take_double("schedule.eps_a_rate", c.schedule.eps_a_rate);
    r.take_int("schedule.n_steps", c.schedule.n_steps);
    r.take_double("schedule.dt", c.schedule.dt);

    for (int i = 0; i < kParamDim; ++i) {
        std::ostringstream lo, hi;
        lo << "prior." << i + 1 << ".min";
        hi << "prior." << i + 1 << ".max";
        r.take_double(lo.str(), c.prior.intervals[i].first);
        r.take_double(hi.str(), c.prior.intervals[i].second);
    }

    r.take_int("stations.count", c.station_count);
    r.take_double("noise.level", c.noise_level);
    r.take_double("noise.floor_eps", c.noise_floor_eps);
    r.take_double("noise.floor_sigma", c.noise_floor_sigma);
    r.take_double("fd.step", c.fd_step);
    r.take_vec8("truth.x_norm", c.truth_norm);
    r.take_int("gradients.count", c.gradient_count);
    r.take_double("gradients.max_failure_fraction", c.gradient_max_failure_fraction);
    r.take_int("bootstrap.count", c.bootstrap_count);
    r.take_int("subspace.dim", c.subspace_dim);
    r.take_long("chain.active.steps", c.active_steps);
    r.take_long("chain.active.burn_in", c.active_burn_in);
    r.take_double("chain.active.proposal_cov", c.active_proposal_cov);
    r.take_double("chain.inactive.proposal_cov", c.inactive_proposal_cov);
    r.take_long("chain.inactive.ess", c.inactive_ess);
    r.take_long("chain.inactive.steps", c.inactive_steps);
    r.take_long("kde.samples", c.kde_samples);
    r.take_double("kde.bandwidth_scale", c.kde_bandwidth_scale);
    r.take_double("driver.tol_lat", c.tol_lat);
    r.take_double("driver.tol_yield_rel", c.tol_yield_rel);
    r.finish();

    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config(os.str(), path);
}

void PipelineConfig::validate() const {
    elastic.validate();
    schedule.validate();
    prior.validate();
    if (station_count < 1) throw ConfigError("stations.count must be >= 1");
    if (!(noise_level >= 0.0)) throw ConfigError("noise.level must be >= 0");
    if (!(noise_floor_eps > 0.0) || !(noise_floor_sigma > 0.0))
        throw ConfigError("noise floors must be > 0");
    if (!(fd_step > 0.0 && fd_step < 1.0)) throw ConfigError("fd.step must be in (0, 1)");
    if (truth_norm.size() != kParamDim ||
        (truth_norm.array().abs() > 1.0).any())
        throw ConfigError("truth.x_norm must be 8 values in [-1, 1]");
    if (gradient_count < kParamDim)
        throw ConfigError("gradients.count must be at least the parameter dimension");
    if (bootstrap_count < 30) throw ConfigError("bootstrap.count must be >= 30");
    if (subspace_dim < 0 || subspace_dim > kParamDim)
        throw ConfigError("subspace.dim must be in [0, 8]");
    if (active_steps != 0 && active_burn_in >= active_steps)
        throw ConfigError("chain.active.burn_in must be < chain.active.steps");
    if (active_proposal_cov < 0.0 || inactive_proposal_cov < 0.0)
        throw ConfigError("proposal covariances must be >= 0");
    if (inactive_ess < 1) throw ConfigError("chain.inactive.ess must be >= 1");
    if (inactive_steps < 100) throw ConfigError("chain.inactive.steps must be >= 100");
    if (kde_samples < 100) throw ConfigError("kde.samples must be >= 100");
    if (!(kde_bandwidth_scale > 0.0)) throw ConfigError("kde.bandwidth_scale must be > 0");
    if (!(tol_lat > 0.0)) throw ConfigError("driver.tol_lat must be > 0");
    if (!(tol_yield_rel > 0.0)) throw ConfigError("driver.tol_yield_rel must be > 0");
}

std::string PipelineConfig::canonical() const {
    std::ostringstream os;
    os << "chain.active.burn_in = " << active_burn_in << "\n";
    os << "chain.active.proposal_cov = " << fmt(active_proposal_cov) << "\n";
    os << "chain.active.steps = " << active_steps << "\n";
    os << "chain.inactive.ess = " << inactive_ess << "\n";
    os << "chain.inactive.proposal_cov = " << fmt(inactive_proposal_cov) << "\n";
    os << "chain.inactive.steps = " << inactive_steps << "\n";
    os << "driver.tol_lat = " << fmt(tol_lat) << "\n";
    os << "driver.tol_yield_rel = " << fmt(tol_yield_rel) << "\n";
    os << "elastic.E_h = " << fmt(elastic.E_h) << "\n";
    os << "elastic.E_s = " << fmt(elastic.E_s) << "\n";
    os << "elastic.S_h = " << fmt(elastic.S_h) << "\n";
    os << "elastic.m = " << fmt(elastic.m) << "\n";
    os << "elastic.nu = " << fmt(elastic.nu) << "\n";
    os << "fd.step = " << fmt(fd_step) << "\n";
    os << "gradients.count = " << gradient_count << "\n";
    os << "gradients.max_failure_fraction = " << fmt(gradient_max_failure_fraction) << "\n";
    os << "bootstrap.count = " << bootstrap_count << "\n";
    os << "kde.bandwidth_scale = " << fmt(kde_bandwidth_scale) << "\n";
    os << "kde.samples = " << kde_samples << "\n";
    os << "noise.floor_eps = " << fmt(noise_floor_eps) << "\n";
    os << "noise.floor_sigma = " << fmt(noise_floor_sigma) << "\n";
    os << "noise.level = " << fmt(noise_level) << "\n";
    for (int i = 0; i < kParamDim; ++i) {
        os << "prior." << i + 1 << ".max = " << fmt(prior.intervals[i].second) << "\n";
        os << "prior." << i + 1 << ".min = " << fmt(prior.intervals[i].first) << "\n";
    }
    os << "schedule.dt = " << fmt(schedule.dt) << "\n";
    os << "schedule.eps_a_rate = " << fmt(schedule.eps_a_rate) << "\n";
    os << "schedule.n_steps = " << schedule.n_steps << "\n";
    os << "schedule.sigma_c = " << fmt(schedule.sigma_c) << "\n";
    os << "seed = " << seed << "\n";
    os << "stations.count = " << station_count << "\n";
    os << "subspace.dim = " << subspace_dim << "\n";
    os << "truth.x_norm =";
    for (int i = 0; i < kParamDim; ++i) os << " " << fmt(truth_norm[i]);
    os << "\n";
    return os.str();
}

std::string PipelineConfig::hash() const {
    // Worker count does not enter the hash: results are
    // thread-count-independent by construction.
    const std::string s = canonical();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PipelineConfig::ResolvedChain PipelineConfig::resolve_active_chain(int k) const {
    ResolvedChain r;
    const bool low_dim = k <= 2;
    r.steps = active_steps > 0 ? active_steps : (low_dim ? 1000000L : 10000000L);
    r.burn_in = active_steps > 0 ? active_burn_in : r.steps / 10;
    const double cov =
        active_proposal_cov > 0.0 ? active_proposal_cov : (low_dim ? 0.02 : 0.0017);
    r.proposal_sd = std::sqrt(cov);
    const double icov = inactive_proposal_cov > 0.0 ? inactive_proposal_cov
                                                    : (low_dim ? 0.4 : 0.8);
    r.inactive_proposal_sd = std::sqrt(icov);
    return r;
}

}  // namespace ghbs
