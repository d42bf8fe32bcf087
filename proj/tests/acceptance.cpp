// Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dspnet/checkpoint.hpp"
#include "dspnet/config.hpp"
#include "dspnet/eval.hpp"
#include "dspnet/gradcheck.hpp"
#include "dspnet/model.hpp"
#include "dspnet/objectives.hpp"
#include "dspnet/pipeline.hpp"
#include "dspnet/synthgen.hpp"
#include "dspnet/tensor.hpp"
#include "dspnet/train.hpp"
#include "testutil.hpp"

using namespace dspnet;
using num::Var;

namespace {

int g_failures = 0;

void report(int n, const std::string& what, bool ok) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", n, what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

Var rowvec(const std::vector<double>& v) { return num::constant({1, v.size()}, v); }
Var rowparam(const std::vector<double>& v) { return num::parameter("", {1, v.size()}, v); }

// ---- criterion 1: finite-difference gradient suite -------------------------

bool criterion_gradients() {
    const double start = now_seconds();
    gradcheck::SuiteOptions opts;
    opts.instances_per_op = 20;
    opts.fd_step = 1e-5;
    opts.tolerance = 1e-4;
    opts.seed = 2024;
    auto results = gradcheck::run_suite(opts);
    const double elapsed = now_seconds() - start;
    bool ok = elapsed < 60.0 && !results.empty();
    for (const auto& r : results) {
        if (!r.pass) {
            std::printf("  gradient mismatch in %s (worst rel err %.3e)\n", r.op.c_str(),
                        r.worst_rel_err);
            ok = false;
        }
    }
    std::printf("  %zu ops checked in %.2fs\n", results.size(), elapsed);
    return ok;
}

// ---- criterion 2: contrastive-weight algebra -------------------------------

double ccr_oracle(const std::vector<double>& h, const std::vector<std::vector<double>>& pos,
                  const std::vector<std::vector<double>>& neg, double tp, double tn,
                  double* wp_sum, double* wn_sum) {
    auto dots = [&h](const std::vector<std::vector<double>>& xs, double tau) {
        std::vector<double> s;
        for (const auto& x : xs) {
            double d = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) d += h[i] * x[i];
            s.push_back(d / tau);
        }
        return s;
    };
    auto softmax = [](std::vector<double> v) {
        const double mx = *std::max_element(v.begin(), v.end());
        double z = 0.0;
        for (auto& x : v) {
            x = std::exp(x - mx);
            z += x;
        }
        for (auto& x : v) x /= z;
        return v;
    };
    auto sp = dots(pos, tp);
    auto sn = dots(neg, tn);
    auto flipped = sp;
    for (auto& x : flipped) x = -x;
    auto wp = softmax(flipped);
    auto wn = softmax(sn);
    *wp_sum = 0.0;
    *wn_sum = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        loss -= wp[i] * sp[i];
        *wp_sum += wp[i];
    }
    for (std::size_t j = 0; j < sn.size(); ++j) {
        loss += wn[j] * sn[j];
        *wn_sum += wn[j];
    }
    return loss;
}

bool criterion_ccr_algebra() {
    Rng rng(301);
    bool ok = true;
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        const std::size_t d = 2 + rng.uniform(5);
        const std::size_t np = 1 + rng.uniform(4);
        const std::size_t nn = 1 + rng.uniform(5);
        auto draw = [&rng, d] {
            std::vector<double> v(d);
            for (auto& x : v) x = rng.normal() * 0.6;
            return v;
        };
        auto hv = draw();
        std::vector<std::vector<double>> pv, nv;
        std::vector<Var> pos, neg;
        for (std::size_t i = 0; i < np; ++i) {
            pv.push_back(draw());
            pos.push_back(rowvec(pv.back()));
        }
        for (std::size_t j = 0; j < nn; ++j) {
            nv.push_back(draw());
            neg.push_back(rowvec(nv.back()));
        }
        const double tp = 0.5 + rng.next_double();
        const double tn = 0.05 + rng.next_double();
        double wp_sum = 0.0, wn_sum = 0.0;
        const double want = ccr_oracle(hv, pv, nv, tp, tn, &wp_sum, &wn_sum);
        const double got =
            objectives::ccr_loss(rowparam(hv), pos, neg, tp, tn)->scalar();
        ok = ok && std::abs(wp_sum - 1.0) <= 1e-12 && std::abs(wn_sum - 1.0) <= 1e-12;
        ok = ok && std::abs(got - want) <= 1e-12;
    }

    // singleton positive: the weight is exactly one, so loss = -s(h,h+) + s(h,h-)
    {
        const std::vector<double> hv = {0.5, -1.0, 2.0};
        const std::vector<double> p = {1.0, 1.0, 0.25};
        const std::vector<double> q = {-0.5, 0.0, 1.0};
        const double tp = 0.8, tn = 0.07;
        const double sp = (0.5 * 1.0 - 1.0 * 1.0 + 2.0 * 0.25) / tp;
        const double sn = (0.5 * -0.5 + 0.0 + 2.0 * 1.0) / tn;
        const double got = objectives::ccr_loss(rowparam(hv), {rowvec(p)}, {rowvec(q)},
                                                tp, tn)->scalar();
        ok = ok && std::abs(got - (-sp + sn)) <= 1e-12;
    }

    // worked example: score gap 1 at unit temperature gives weights 0.2689/0.7311
    {
        const double got = objectives::ccr_loss(rowparam({1.0, 0.0}),
                                                {rowvec({1.0, 0.0}), rowvec({0.0, 1.0})},
                                                {rowvec({0.3, 0.4})}, 1.0, 1.0)->scalar();
        const double w1 = std::exp(-1.0) / (1.0 + std::exp(-1.0));  // 0.26894...
        const double w2 = 1.0 - w1;                                 // 0.73105...
        ok = ok && std::abs(w1 - 0.2689) <= 1e-4 && std::abs(w2 - 0.7311) <= 1e-4;
        ok = ok && std::abs(got - (-(w1 * 1.0 + w2 * 0.0) + 0.3)) <= 1e-4;
    }
    return ok;
}

// ---- criterion 3: loss and metric oracles ----------------------------------

bool criterion_oracles() {
    bool ok = true;
    Rng rng(302);

    // dsl_loss vs plain clamped binary cross-entropy
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        const std::size_t n = 1 + rng.uniform(8);
        std::vector<double> p(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.next_double();
            y[i] = rng.uniform(2) ? 1.0 : 0.0;
        }
        double want = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pi = std::min(std::max(p[i], 1e-12), 1.0 - 1e-12);
            want -= y[i] * std::log(pi) + (1.0 - y[i]) * std::log(1.0 - pi);
        }
        want /= static_cast<double>(n);
        ok = std::abs(objectives::dsl_loss(rowvec(p), y)->scalar() - want) <= 1e-12;
    }

    // recall / ndcg vs brute force over random rankings
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        const std::size_t m = 2 + rng.uniform(9);
        std::vector<int> ranked(m);
        for (std::size_t i = 0; i < m; ++i) ranked[i] = static_cast<int>(i + 1);
        rng.shuffle(ranked.begin(), ranked.end());
        std::set<int> relevant;
        const std::size_t nrel = 1 + rng.uniform(m);
        while (relevant.size() < nrel) relevant.insert(static_cast<int>(1 + rng.uniform(m)));
        const std::size_t k = 1 + rng.uniform(m);

        std::size_t hits = 0;
        double dcg = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (relevant.count(ranked[i])) {
                ++hits;
                dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
            }
        }
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) {
            idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
        const double want_recall = static_cast<double>(hits) / static_cast<double>(nrel);
        const double want_ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
        ok = std::abs(eval::recall_at_k(ranked, relevant, k) - want_recall) <= 1e-12 &&
             std::abs(eval::ndcg_at_k(ranked, relevant, k) - want_ndcg) <= 1e-12;
    }

    // rank_candidates vs score-then-sort on a random tiny model
    auto cfg = testutil::tiny_encoder();
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        Rng mr = rng.fork(5000 + rep);
        auto m = model::DualModel::init(cfg, mr);
        data::LabeledExample ex;
        const std::size_t real = 2 + mr.uniform(4);
        for (std::size_t i = 0; i < cfg.max_len; ++i) {
            const bool live = i >= cfg.max_len - real;
            ex.mask.push_back(live ? 1 : 0);
            ex.item_ids.push_back(live ? static_cast<int>(1 + mr.uniform(10)) : 0);
            ex.scene_ids.push_back(live ? static_cast<int>(1 + mr.uniform(3)) : 0);
        }
        std::set<int> cands;
        while (cands.size() < 4) cands.insert(static_cast<int>(1 + mr.uniform(10)));
        ex.item_candidates.assign(cands.begin(), cands.end());
        rng.shuffle(ex.item_candidates.begin(), ex.item_candidates.end());
        ex.item_labels.assign(ex.item_candidates.size(), 0.0);
        ex.item_labels[0] = 1.0;

        auto out = model::forward(m, ex.item_ids, ex.scene_ids, ex.mask);
        auto probs = objectives::score(
            out.o_item, num::embedding_lookup(m.item_emb, ex.item_candidates));
        std::vector<std::pair<double, int>> scored;
        for (std::size_t i = 0; i < ex.item_candidates.size(); ++i) {
            scored.push_back({probs->value[i], ex.item_candidates[i]});
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        auto ranked = eval::rank_candidates(m, ex, eval::Task::kNextItem);
        ok = ranked.size() == scored.size();
        for (std::size_t i = 0; ok && i < ranked.size(); ++i) {
            ok = ranked[i] == scored[i].second;
        }
    }

    // total_loss vs the closed-form weighted sum
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        const double di = rng.normal(), ds = rng.normal(), ap = rng.normal(),
                     cc = rng.normal();
        const double l = rng.next_double(), a = rng.next_double(), b = rng.next_double();
        const auto bundle = objectives::total_loss(di, ds, ap, cc, l, a, b);
        ok = std::abs(bundle.total - (di + l * ds + a * ap + b * cc)) <= 1e-12;
    }
    return ok;
}

// ---- criterion 4: augmentation invariants ----------------------------------

bool criterion_augmentation() {
    Rng rng(303);
    bool ok = true;
    for (int rep = 0; rep < 10000 && ok; ++rep) {
        const std::size_t real = 1 + rng.uniform(8);
        const std::size_t pad = rng.uniform(3);
        std::vector<int> ids(pad, 0);
        for (std::size_t i = 0; i < real; ++i) {
            ids.push_back(static_cast<int>(1 + rng.uniform(50)));
        }
        const double ratio = rng.next_double();

        Rng a = rng.fork(rep);
        Rng b = rng.fork(rep);
        auto masked = objectives::augment_mask(ids, ratio, a);
        ok = masked == objectives::augment_mask(ids, ratio, b);  // seed replay

        std::size_t count = 0;
        for (std::size_t i = 0; ok && i < ids.size(); ++i) {
            if (i < pad) {
                ok = masked[i] == 0;  // padding untouched
            } else if (masked[i] == 0) {
                ++count;
            } else {
                ok = masked[i] == ids[i];  // survivors unchanged
            }
        }
        const std::size_t want =
            std::min(static_cast<std::size_t>(ratio * static_cast<double>(real)), real - 1);
        ok = ok && count == want;
        ok = ok && objectives::augment_mask(ids, 0.0, a) == ids;  // ratio 0 is identity

        Rng c = rng.fork(100000 + rep);
        Rng d = rng.fork(100000 + rep);
        auto shuffled = objectives::augment_reorder(ids, c);
        ok = ok && shuffled == objectives::augment_reorder(ids, d);
        std::multiset<int> before(ids.begin() + pad, ids.end());
        std::multiset<int> after(shuffled.begin() + pad, shuffled.end());
        ok = ok && before == after;
        for (std::size_t i = 0; ok && i < pad; ++i) ok = shuffled[i] == 0;
    }
    return ok;
}

// ---- criteria 5 and 6: synthetic experiments -------------------------------

enum class Arm { kDual, kSceneBlind, kOneToOne };

double experiment_recall5(std::uint64_t seed, double misalignment, Arm arm) {
    synth::SynthSpec spec;
    spec.num_users = 2000;
    spec.num_items = 400;
    spec.num_scenes = 4;
    spec.seq_len_min = 8;
    spec.seq_len_max = 16;
    spec.interplay = 1.0;
    spec.well_separated = true;
    spec.misalignment_rate = misalignment;
    spec.seed = 900 + seed;
    // strongly cyclic scene walk: the scene history predicts the next scene,
    // and through the disjoint item blocks, the next item's neighborhood
    spec.scene_transition.assign(4, std::vector<double>(4, 0.1 / 3.0));
    for (std::size_t s = 0; s < 4; ++s) spec.scene_transition[s][(s + 1) % 4] = 0.9;

    config::DataOptions dopts;
    dopts.min_hist = 3;
    dopts.min_future = 1;
    dopts.num_negatives = 20;
    // popularity-matched negatives keep the candidate task from being solved
    // by a user-independent popularity ranking
    dopts.popularity_negatives = true;
    dopts.max_len = 16;
    dopts.seed = 900 + seed;

    auto prepared = pipeline::prepare(synth::generate(spec).events, dopts);
    if (arm == Arm::kSceneBlind) {
        prepared.train = train::blind_scenes(prepared.train);
        prepared.val = train::blind_scenes(prepared.val);
        prepared.test = train::blind_scenes(prepared.test);
    }

    model::EncoderConfig enc;
    enc.item_vocab = prepared.items.size();
    enc.scene_vocab = prepared.scenes.size();
    enc.item_dim = 16;
    enc.scene_dim = 8;
    enc.num_layers = 1;
    enc.num_heads = 2;
    enc.max_len = 16;
    enc.variant = arm == Arm::kOneToOne ? model::Variant::kOneToOne : model::Variant::kDual;

    train::TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.batch_size = 8;
    tc.max_epochs = 35;
    tc.patience = 35;
    tc.seed = seed;
    tc.lambda = arm == Arm::kSceneBlind ? 0.0 : 2.0;

    auto [m, rep] = train::train(prepared.train, prepared.val, enc, tc);
    eval::EvalOptions eopts;
    eopts.ks = {5};
    return eval::evaluate(m, prepared.test, eval::Task::kNextItem, eopts)
        .overall.recall.at(5);
}

bool criterion_interplay() {
    const double start = now_seconds();
    bool all_positive = true;
    double dual_mean = 0.0, blind_mean = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const double dual = experiment_recall5(s, 0.2, Arm::kDual);
        const double blind = experiment_recall5(s, 0.2, Arm::kSceneBlind);
        std::printf("  seed %llu: dual R@5 %.4f vs scene-blind %.4f\n",
                    static_cast<unsigned long long>(s), dual, blind);
        all_positive = all_positive && dual > blind;
        dual_mean += dual / 5.0;
        blind_mean += blind / 5.0;
    }
    const double elapsed = now_seconds() - start;
    std::printf("  means: dual %.4f, scene-blind %.4f (%.0fs)\n", dual_mean, blind_mean,
                elapsed);
    return all_positive && dual_mean > blind_mean && elapsed < 900.0;
}

bool criterion_misalignment() {
    double dual0 = 0.0, dual3 = 0.0, oto0 = 0.0, oto3 = 0.0;
    std::printf("  %-6s %-12s %-12s\n", "seed", "dual 0/0.3", "1:1 0/0.3");
    for (std::uint64_t s = 0; s < 5; ++s) {
        const double d0 = experiment_recall5(s, 0.0, Arm::kDual);
        const double d3 = experiment_recall5(s, 0.3, Arm::kDual);
        const double o0 = experiment_recall5(s, 0.0, Arm::kOneToOne);
        const double o3 = experiment_recall5(s, 0.3, Arm::kOneToOne);
        std::printf("  %-6llu %.4f/%.4f %.4f/%.4f\n",
                    static_cast<unsigned long long>(s), d0, d3, o0, o3);
        dual0 += d0 / 5.0;
        dual3 += d3 / 5.0;
        oto0 += o0 / 5.0;
        oto3 += o3 / 5.0;
    }
    const double dual_drop = dual0 - dual3;
    const double oto_drop = oto0 - oto3;
    std::printf("  mean degradation 0 -> 0.3: dual %.4f, one-to-one %.4f\n", dual_drop,
                oto_drop);
    return dual_drop <= oto_drop;
}

// ---- criterion 7: adversarial prior moment matching ------------------------

bool criterion_prior_moments() {
    bool ok = true;
    for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
        auto p = testutil::fixture_a();
        auto enc = testutil::tiny_encoder(p.items.size(), p.scenes.size());
        enc.max_len = 12;

        train::TrainConfig tc;
        tc.batch_size = 16;
        tc.max_epochs = 50;
        tc.patience = 50;
        tc.seed = seed;
        tc.enable_apr = true;
        tc.alpha = 2.0;
        tc.disc_steps_per_gen_step = 2;
        tc.restore_best = false;  // the claim is about the epoch-50 model
        auto [m, rep] = train::train(p.train, p.val, enc, tc);

        // batch moments of every z coordinate over the training examples
        std::vector<std::vector<double>> coords(enc.scene_dim + enc.item_dim);
        for (const auto& ex : p.train.examples) {
            auto out = model::forward(m, ex.item_ids, ex.scene_ids, ex.mask);
            for (std::size_t i = 0; i < enc.scene_dim; ++i) {
                coords[i].push_back(out.z_scene->value[i]);
            }
            for (std::size_t i = 0; i < enc.item_dim; ++i) {
                coords[enc.scene_dim + i].push_back(out.z_item->value[i]);
            }
        }
        double worst_mean = 0.0, lo_var = 1.0, hi_var = 1.0;
        for (const auto& c : coords) {
            double mean = 0.0, var = 0.0;
            for (double v : c) mean += v;
            mean /= static_cast<double>(c.size());
            for (double v : c) var += (v - mean) * (v - mean);
            var /= static_cast<double>(c.size());
            worst_mean = std::max(worst_mean, std::abs(mean));
            lo_var = std::min(lo_var, var);
            hi_var = std::max(hi_var, var);
        }
        std::printf("  seed %llu: |mean| <= %.3f, var in [%.3f, %.3f]\n",
                    static_cast<unsigned long long>(seed), worst_mean, lo_var, hi_var);
        ok = ok && worst_mean <= 0.2 && lo_var >= 0.6 && hi_var <= 1.4;
    }
    return ok;
}

// ---- criterion 8: determinism ----------------------------------------------

bool criterion_determinism() {
    auto p = testutil::fixture_a();
    auto enc = testutil::tiny_encoder(p.items.size(), p.scenes.size());
    enc.max_len = 12;
    train::TrainConfig tc;
    tc.batch_size = 16;
    tc.max_epochs = 3;
    tc.patience = 4;
    tc.seed = 7;
    tc.enable_apr = true;
    tc.enable_ccr = true;
    tc.alpha = 0.1;
    tc.beta = 0.01;

    auto [m1, r1] = train::train(p.train, p.val, enc, tc);
    auto [m2, r2] = train::train(p.train, p.val, enc, tc);

    bool ok = r1.epoch_losses.size() == r2.epoch_losses.size();
    for (std::size_t e = 0; ok && e < r1.epoch_losses.size(); ++e) {
        const auto& a = r1.epoch_losses[e];
        const auto& b = r2.epoch_losses[e];
        ok = a.dsl_item == b.dsl_item && a.dsl_scene == b.dsl_scene && a.apr == b.apr &&
             a.ccr == b.ccr && a.total == b.total && r1.val_recall10[e] == r2.val_recall10[e];
    }
    ok = ok && r1.best_epoch == r2.best_epoch && r1.epochs_run == r2.epochs_run;
    for (std::size_t i = 0; ok && i < m1.all_params.size(); ++i) {
        ok = m1.all_params[i]->value == m2.all_params[i]->value;
    }
    const auto e1 = eval::evaluate(m1, p.test, eval::Task::kNextItem);
    const auto e2 = eval::evaluate(m2, p.test, eval::Task::kNextItem);
    ok = ok && eval::metrics_to_json(e1) == eval::metrics_to_json(e2);
    return ok;
}

// ---- criterion 9: structural wiring ----------------------------------------

bool criterion_wiring() {
    bool ok = true;
    Rng rng(304);
    for (int rep = 0; rep < 20 && ok; ++rep) {
        auto cfg = testutil::tiny_encoder();
        Rng mr = rng.fork(rep);
        auto m = model::DualModel::init(cfg, mr);

        std::vector<int> items, scenes;
        std::vector<unsigned char> mask;
        const std::size_t real = 2 + mr.uniform(4);
        for (std::size_t i = 0; i < cfg.max_len; ++i) {
            const bool live = i >= cfg.max_len - real;
            mask.push_back(live ? 1 : 0);
            items.push_back(live ? static_cast<int>(1 + mr.uniform(10)) : 0);
            scenes.push_back(live ? static_cast<int>(1 + mr.uniform(3)) : 0);
        }

        // conditional independence: the scene fusion must not reach z_item,
        // and a selector head must not reach either latent
        auto base = model::forward(m, items, scenes, mask);
        const double fuse_saved = m.fuse_scene.weights[0]->value[0];
        m.fuse_scene.weights[0]->value[0] += 0.5;
        auto poked = model::forward(m, items, scenes, mask);
        ok = base.z_item->value == poked.z_item->value &&
             base.z_scene->value != poked.z_scene->value;
        m.fuse_scene.weights[0]->value[0] = fuse_saved;

        const double sel_saved = m.sel_item.weights[0]->value[0];
        m.sel_item.weights[0]->value[0] += 0.5;
        auto sel = model::forward(m, items, scenes, mask);
        ok = ok && base.o_item->value != sel.o_item->value &&
             base.z_item->value == sel.z_item->value &&
             base.z_scene->value == sel.z_scene->value;
        m.sel_item.weights[0]->value[0] = sel_saved;

        // cross-branch gradient flow: the item loss must reach scene parameters
        auto out = model::forward(m, items, scenes, mask);
        Var probs = objectives::score(out.o_item,
                                      num::embedding_lookup(m.item_emb, {1, 2, 3}));
        Var loss = objectives::dsl_loss(probs, {1.0, 0.0, 0.0});
        num::zero_grad(m.encoder_params);
        num::backward(loss);
        double scene_grad = 0.0;
        for (double g : m.scene_emb->grad) scene_grad += g * g;
        for (double g : m.scene_branch.layers[0].w1->grad) scene_grad += g * g;
        ok = ok && scene_grad > 0.0;
    }
    return ok;
}

// ---- criterion 10: overfit sanity ------------------------------------------

bool criterion_overfit() {
    synth::SynthSpec spec;
    spec.num_users = 32;
    spec.num_items = 20;
    spec.num_scenes = 3;
    spec.seq_len_min = 6;
    spec.seq_len_max = 10;
    spec.interplay = 1.0;
    spec.seed = 13;

    config::DataOptions dopts;
    dopts.min_hist = 3;
    dopts.min_future = 1;
    dopts.val_frac = 0.0;
    dopts.test_frac = 0.0;
    dopts.num_negatives = 6;
    dopts.max_len = 10;
    dopts.seed = 13;

    auto p = pipeline::prepare(synth::generate(spec).events, dopts);
    std::printf("  %zu training users\n", p.train.examples.size());

    model::EncoderConfig enc;
    enc.item_vocab = p.items.size();
    enc.scene_vocab = p.scenes.size();
    enc.item_dim = 16;
    enc.scene_dim = 8;
    enc.num_layers = 1;
    enc.num_heads = 2;
    enc.max_len = 10;

    train::TrainConfig tc;  // default learning rate
    tc.batch_size = 16;
    tc.max_epochs = 200;
    tc.patience = 200;
    tc.seed = 13;
    tc.restore_best = false;  // memorization is the point here

    auto [m, rep] = train::train(p.train, p.train, enc, tc);
    eval::EvalOptions eopts;
    eopts.ks = {1};
    const double r1 =
        eval::evaluate(m, p.train, eval::Task::kNextItem, eopts).overall.recall.at(1);
    std::printf("  train R@1 %.4f after %zu epochs\n", r1, rep.epochs_run);
    return r1 >= 0.95;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select a subset of criteria, e.g. `acceptance 5 6`.
    auto wanted = [&](int n) {
        if (argc < 2) return true;
        for (int i = 1; i < argc; ++i) {
            if (std::atoi(argv[i]) == n) return true;
        }
        return false;
    };
    struct Entry {
        int num;
        const char* what;
        bool (*fn)();
    };
    const Entry entries[] = {
        {1, "gradient suite matches finite differences", criterion_gradients},
        {2, "contrastive weight algebra", criterion_ccr_algebra},
        {3, "loss and metric scalar oracles", criterion_oracles},
        {4, "augmentation invariants", criterion_augmentation},
        {5, "scene interplay lifts next-item recall", criterion_interplay},
        {6, "dual encoder is no more misalignment-sensitive", criterion_misalignment},
        {7, "adversarial prior matches Gaussian moments", criterion_prior_moments},
        {8, "bit-identical reruns under a fixed seed", criterion_determinism},
        {9, "latent wiring and cross-branch gradients", criterion_wiring},
        {10, "overfit sanity on a tiny dataset", criterion_overfit},
    };
    for (const auto& e : entries) {
        if (wanted(e.num)) report(e.num, e.what, e.fn());
    }
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria passed\n");
    return 0;
}
