#include "dspnet/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "dspnet/rng.hpp"

namespace dspnet::synth {

void SynthSpec::validate() const {
    if (num_users == 0 || num_items == 0 || num_scenes == 0) {
        throw ConfigError("synth: num_users/num_items/num_scenes must be positive");
    }
    if (seq_len_min < 2 || seq_len_max < seq_len_min) {
        throw ConfigError("synth: need 2 <= seq_len_min <= seq_len_max");
    }
    if (interplay < 0.0 || interplay > 1.0) {
        throw ConfigError("synth: interplay must be in [0,1]");
    }
    if (misalignment_rate < 0.0 || misalignment_rate > 1.0) {
        throw ConfigError("synth: misalignment_rate must be in [0,1]");
    }
    if (!scene_transition.empty()) {
        if (scene_transition.size() != num_scenes) {
            throw ConfigError("synth: scene_transition must be num_scenes x num_scenes");
        }
        for (const auto& row : scene_transition) {
            if (row.size() != num_scenes) {
                throw ConfigError("synth: scene_transition must be num_scenes x num_scenes");
            }
            double s = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ConfigError("synth: negative transition probability");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-9) {
                throw ConfigError("synth: scene_transition rows must sum to 1");
            }
        }
    }
}

namespace {

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
    double u = rng.next_double();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        u -= probs[i];
        if (u < 0.0) return i;
    }
    return probs.size() - 1;
}

// Dirichlet(alpha) via normalized Gamma draws (Marsaglia-Tsang with boost for
// alpha < 1).
std::vector<double> dirichlet(std::size_t n, double alpha, Rng& rng) {
    auto gamma_draw = [&rng](double a) {
        double boost = 1.0;
        if (a < 1.0) {
            boost = std::pow(std::max(rng.next_double(), 0x1.0p-53), 1.0 / a);
            a += 1.0;
        }
        const double d = a - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = rng.normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = rng.next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
            if (std::log(std::max(u, 0x1.0p-53)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                return boost * d * v;
            }
        }
    };
    std::vector<double> out(n);
    double total = 0.0;
    for (auto& x : out) {
        x = gamma_draw(alpha);
        total += x;
    }
    for (auto& x : out) x /= total;
    return out;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    Rng master(spec.seed);

    GroundTruth truth;
    truth.spec = spec;
    Rng dist_rng = master.fork(0xd157);
    truth.global_item_dist = dirichlet(spec.num_items, 1.0, dist_rng);
    truth.scene_item_dist.resize(spec.num_scenes);
    for (std::size_t s = 0; s < spec.num_scenes; ++s) {
        if (spec.well_separated) {
            // Disjoint item blocks per scene; leftover items join the last block.
            const std::size_t block = spec.num_items / spec.num_scenes;
            const std::size_t lo = s * block;
            const std::size_t hi = (s + 1 == spec.num_scenes) ? spec.num_items : lo + block;
            std::vector<double> probs(spec.num_items, 0.0);
            auto inner = dirichlet(hi - lo, 0.1, dist_rng);
            for (std::size_t i = lo; i < hi; ++i) probs[i] = inner[i - lo];
            truth.scene_item_dist[s] = std::move(probs);
        } else {
            truth.scene_item_dist[s] = dirichlet(spec.num_items, 0.1, dist_rng);
        }
    }

    std::vector<std::vector<double>> transition = spec.scene_transition;
    if (transition.empty()) {
        transition.assign(spec.num_scenes,
                          std::vector<double>(spec.num_scenes, 1.0 / spec.num_scenes));
    }

    SynthResult result;
    result.truth = truth;
    for (std::size_t u = 0; u < spec.num_users; ++u) {
        Rng rng = master.fork(1 + u);
        const std::size_t len =
            spec.seq_len_min + rng.uniform(spec.seq_len_max - spec.seq_len_min + 1);
        std::vector<std::size_t> scenes(len), items(len);
        std::size_t scene = rng.uniform(spec.num_scenes);
        for (std::size_t t = 0; t < len; ++t) {
            if (t > 0) scene = sample_categorical(transition[scene], rng);
            scenes[t] = scene;
            const bool conditioned = rng.next_double() < spec.interplay;
            items[t] = sample_categorical(
                conditioned ? truth.scene_item_dist[scene] : truth.global_item_dist, rng);
        }
        // Misalignment: with given probability log the scene of a later event
        // of the same user (delayed conversion), items untouched.
        std::vector<std::size_t> logged = scenes;
        for (std::size_t t = 0; t + 1 < len; ++t) {
            if (rng.next_double() < spec.misalignment_rate) {
                logged[t] = scenes[t + 1 + rng.uniform(len - t - 1)];
            }
        }
        for (std::size_t t = 0; t < len; ++t) {
            data::Interaction ev;
            ev.user = "u" + std::to_string(u);
            ev.item = "i" + std::to_string(items[t]);
            ev.scene = "s" + std::to_string(logged[t]);
            ev.ts = static_cast<std::int64_t>(t);
            result.events.push_back(std::move(ev));
        }
    }
    return result;
}

double scene_item_mutual_information(const std::vector<data::Interaction>& events) {
    std::unordered_map<std::string, double> ps, pi;
    std::map<std::pair<std::string, std::string>, double> joint;
    const double n = static_cast<double>(events.size());
    for (const auto& ev : events) {
        ps[ev.scene] += 1.0;
        pi[ev.item] += 1.0;
        joint[{ev.scene, ev.item}] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        const double pxy = c / n;
        mi += pxy * std::log(pxy * n * n / (ps[key.first] * pi[key.second]));
    }
    return mi;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json j;
    j["scene_item_dist"] = truth.scene_item_dist;
    j["global_item_dist"] = truth.global_item_dist;
    j["spec"] = {{"num_users", truth.spec.num_users},
                 {"num_items", truth.spec.num_items},
                 {"num_scenes", truth.spec.num_scenes},
                 {"seq_len_min", truth.spec.seq_len_min},
                 {"seq_len_max", truth.spec.seq_len_max},
                 {"interplay", truth.spec.interplay},
                 {"misalignment_rate", truth.spec.misalignment_rate},
                 {"well_separated", truth.spec.well_separated},
                 {"seed", truth.spec.seed}};
    return j.dump(2);
}

}  // namespace dspnet::synth
